#pragma once

#include <functional>
#include <string>
#include <vector>

#include "webuq/agents.hpp"
#include "webuq/fixture.hpp"
#include "webuq/webenv.hpp"

namespace webuq::testsupport {

// Function-backed providers for driving planner/search tests inline.

struct FnAnalysis final : agents::AnalysisProvider {
    std::function<agents::AnalysisResponse(const agents::AnalysisRequest&)> fn;
    agents::AnalysisResponse analyze_task(const agents::AnalysisRequest& req) override {
        return fn(req);
    }
};

struct FnPlan final : agents::PlanProvider {
    std::function<std::vector<std::string>(const agents::PlanRequest&)> fn;
    std::vector<std::string> generate_plan(const agents::PlanRequest& req) override {
        return fn(req);
    }
};

struct FnReasoning final : agents::ReasoningProvider {
    std::function<agents::ReasoningResponse(const agents::ReasoningRequest&)> fn;
    agents::ReasoningResponse propose_actions(const agents::ReasoningRequest& req) override {
        return fn(req);
    }
};

struct FnEvaluation final : agents::EvaluationProvider {
    std::function<agents::EvaluationResponse(const agents::EvaluationRequest&)> fn;
    agents::EvaluationResponse evaluate_state(const agents::EvaluationRequest& req) override {
        return fn(req);
    }
};

/// Bundles the four function providers (explicit/implicit share one).
struct FnProviders {
    FnAnalysis analysis;
    FnPlan planner;
    FnReasoning reasoning;
    FnEvaluation evaluation;

    agents::AgentProviders providers() {
        agents::AgentProviders p;
        p.analysis = &analysis;
        p.explicit_planner = &planner;
        p.implicit_planner = &planner;
        p.reasoning = &reasoning;
        p.evaluation = &evaluation;
        return p;
    }
};

/// One-page environment with `buttons` clickable buttons (b0..bN-1),
/// no transition rules. Clicks stay on the page, unknown elements give
/// ExecutionError observations, Stop terminates. Enough surface for
/// search-mechanics tests with inline providers.
inline webenv::TaskFixture arena_fixture(int buttons, int max_steps = 30) {
    webenv::TaskFixture f;
    f.id = "arena";
    f.instruction = "exercise the search";
    f.initial_page = "hub";
    f.max_steps = max_steps;
    webenv::Page hub;
    hub.id = "hub";
    for (int i = 0; i < buttons; ++i) {
        Element e;
        e.id = "b" + std::to_string(i);
        e.role = "button";
        e.name = "Button " + std::to_string(i);
        e.interactable = true;
        hub.elements.push_back(e);
    }
    f.pages.push_back(hub);
    f.success.kind = webenv::SuccessPredicate::Kind::Stopped;
    return f;
}

inline Action click(const std::string& el) {
    return Action{OperationKind::Click, el, ""};
}

inline Action stop(const std::string& answer) {
    return Action{OperationKind::Stop, "", answer};
}

inline agents::ActionCandidate cand(Action a, double conf) {
    return agents::ActionCandidate{std::move(a), conf, false};
}

} // namespace webuq::testsupport
