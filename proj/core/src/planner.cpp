#include "webuq/planner.hpp"

#include "webuq/errors.hpp"
#include "webuq/util.hpp"

#include <algorithm>
#include <cmath>

namespace webuq::planner {

const char* to_string(PlanningMode m) {
    return m == PlanningMode::Explicit ? "explicit" : "implicit";
}

const char* to_string(ModeOverride m) {
    switch (m) {
        case ModeOverride::Adaptive: return "adaptive";
        case ModeOverride::ForceExplicit: return "force_explicit";
        case ModeOverride::ForceImplicit: return "force_implicit";
    }
    return "?";
}

ModeOverride mode_override_from_string(const std::string& s) {
    if (s == "adaptive") return ModeOverride::Adaptive;
    if (s == "force_explicit") return ModeOverride::ForceExplicit;
    if (s == "force_implicit") return ModeOverride::ForceImplicit;
    throw ConfigError("unknown mode override: " + s);
}

void to_json(json& j, const TaskAnalysis& a) {
    j = json{{"remaining", a.remaining_objectives}, {"u_plan", a.u_plan}};
}

void to_json(json& j, const Subgoal& g) {
    j = json{{"description", g.description}, {"origin_mode", to_string(g.origin_mode)}};
    if (g.index_in_plan) j["index_in_plan"] = *g.index_in_plan;
}

void to_json(json& j, const PlannerConfig& c) {
    j = json{{"delta", c.delta}, {"mode_override", to_string(c.mode_override)}};
}

void from_json(const json& j, PlannerConfig& c) {
    c.delta = j.value("delta", 0.4);
    c.mode_override = mode_override_from_string(j.value("mode_override", std::string{"adaptive"}));
}

TaskAnalysis analyze(const std::string& instruction, const Observation& observation,
                     const ExecutionHistory& history, agents::AnalysisProvider& provider,
                     PlannerMeta* meta) {
    if (instruction.empty()) {
        throw Error("analyze requires a non-empty instruction");
    }

    agents::AnalysisRequest req{instruction, observation, history};
    std::string last_error;
    for (int attempt = 0; attempt < 2; ++attempt) {
        agents::AnalysisResponse resp;
        try {
            resp = provider.analyze_task(req);
        } catch (const MalformedOutput& e) {
            last_error = e.what();
            if (meta && attempt == 0) meta->retries += 1;
            continue;
        }
        if (!std::isfinite(resp.u_plan)) {
            last_error = "non-numeric task uncertainty";
            if (meta && attempt == 0) meta->retries += 1;
            continue;
        }
        TaskAnalysis out;
        out.remaining_objectives = std::move(resp.remaining_objectives);
        out.u_plan = std::clamp(resp.u_plan, 0.0, 1.0);
        if (out.u_plan != resp.u_plan && meta) {
            meta->warnings.push_back("u_plan " + format_double(resp.u_plan) + " clamped to " +
                                     format_double(out.u_plan));
        }
        return out;
    }
    throw ProviderOutputInvalid("task analysis unusable after retry: " + last_error);
}

PlanningMode select_mode(double u_plan, const PlannerConfig& cfg) {
    switch (cfg.mode_override) {
        case ModeOverride::ForceExplicit: return PlanningMode::Explicit;
        case ModeOverride::ForceImplicit: return PlanningMode::Implicit;
        case ModeOverride::Adaptive: break;
    }
    return u_plan <= cfg.delta ? PlanningMode::Explicit : PlanningMode::Implicit;
}

Subgoal next_subgoal(const TaskAnalysis& analysis, const Observation& observation,
                     PlanningMode mode, const agents::AgentProviders& providers,
                     PlannerMeta* meta) {
    if (analysis.remaining_objectives.empty()) {
        throw Error("next_subgoal requires remaining objectives");
    }

    agents::PlanRequest req;
    req.objectives = analysis.remaining_objectives;
    req.observation = observation;
    req.kind = mode == PlanningMode::Explicit ? agents::PlanKind::Explicit
                                              : agents::PlanKind::Implicit;
    agents::PlanProvider& provider = mode == PlanningMode::Explicit
                                         ? *providers.explicit_planner
                                         : *providers.implicit_planner;

    std::string last_error;
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::vector<std::string> plan;
        try {
            plan = provider.generate_plan(req);
        } catch (const MalformedOutput& e) {
            last_error = e.what();
            if (meta && attempt == 0) meta->retries += 1;
            continue;
        }
        if (plan.empty() || plan.front().empty()) {
            last_error = "empty plan";
            if (meta && attempt == 0) meta->retries += 1;
            continue;
        }
        Subgoal g;
        g.description = plan.front();
        g.origin_mode = mode;
        if (mode == PlanningMode::Explicit) {
            g.index_in_plan = 0;
            // The tail is replanned from scratch next step; keep it only
            // for the trace.
            if (meta) {
                meta->discarded_plan_tail.assign(plan.begin() + 1, plan.end());
            }
        }
        return g;
    }
    throw ProviderOutputInvalid("plan unusable after retry: " + last_error);
}

} // namespace webuq::planner
