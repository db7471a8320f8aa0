#include "webuq/scripted_backend.hpp"

#include "webuq/errors.hpp"
#include "webuq/util.hpp"

#include <algorithm>

namespace webuq::agents {

namespace {

bool subgoal_matches(const webenv::ScriptWhen& when, const std::string& subgoal) {
    return !when.subgoal_contains || subgoal.find(*when.subgoal_contains) != std::string::npos;
}

// Deterministic double in [0, 1) from a mixed state.
double unit_draw(std::uint64_t& state) {
    state = splitmix64(state);
    return static_cast<double>(state >> 11) * 0x1.0p-53;
}

} // namespace

ScriptedBackend::ScriptedBackend(std::string task_id, webenv::ProviderScript script,
                                 ScriptedBackendConfig config)
    : task_id_(std::move(task_id)), script_(std::move(script)), config_(config) {}

AgentProviders ScriptedBackend::providers() {
    AgentProviders p;
    p.analysis = this;
    p.explicit_planner = this;
    p.implicit_planner = this;
    p.reasoning = this;
    p.evaluation = this;
    return p;
}

AnalysisResponse ScriptedBackend::analyze_task(const AnalysisRequest& req) {
    for (const auto& rule : script_.analysis) {
        if (rule.when.matches_observation(req.observation)) {
            return {rule.objectives, rule.u_plan};
        }
    }
    throw MalformedOutput("task '" + task_id_ + "': no analysis rule matches " +
                          req.observation.digest());
}

std::vector<std::string> ScriptedBackend::generate_plan(const PlanRequest& req) {
    if (req.kind == PlanKind::Explicit) {
        for (const auto& rule : script_.explicit_plans) {
            if (rule.when.matches_observation(req.observation)) {
                return rule.plan;
            }
        }
        throw MalformedOutput("task '" + task_id_ + "': no explicit plan rule matches " +
                              req.observation.digest());
    }
    for (const auto& rule : script_.implicit_plans) {
        if (rule.when.matches_observation(req.observation)) {
            return {rule.next};
        }
    }
    throw MalformedOutput("task '" + task_id_ + "': no implicit plan rule matches " +
                          req.observation.digest());
}

std::uint64_t ScriptedBackend::request_seed(const ReasoningRequest& req) const {
    std::uint64_t s = mix64(config_.seed, fnv1a64(task_id_));
    s = mix64(s, fnv1a64(req.subgoal));
    s = mix64(s, fnv1a64(req.observation.digest()));
    s = mix64(s, static_cast<std::uint64_t>(req.excluded.size()));
    s = mix64(s, static_cast<std::uint64_t>(req.k));
    return s;
}

ReasoningResponse ScriptedBackend::propose_actions(const ReasoningRequest& req) {
    if (req.k < 1) throw Error("reasoning request with k < 1");

    const webenv::ReasoningRule* matched = nullptr;
    for (const auto& rule : script_.reasoning) {
        if (!rule.when.matches_observation(req.observation)) continue;
        if (!subgoal_matches(rule.when, req.subgoal)) continue;
        if (rule.when.excluded_min &&
            static_cast<int>(req.excluded.size()) < *rule.when.excluded_min) {
            continue;
        }
        matched = &rule;
        break;
    }
    if (!matched) {
        throw MalformedOutput("task '" + task_id_ + "': no reasoning rule matches subgoal \"" +
                              req.subgoal + "\" at " + req.observation.digest());
    }

    ReasoningResponse resp;
    for (const auto& spec : matched->candidates) {
        const bool excluded = std::any_of(req.excluded.begin(), req.excluded.end(),
                                          [&](const Action& a) { return a == spec.action; });
        if (excluded) continue;
        if (static_cast<int>(resp.candidates.size()) >= req.k) break;
        resp.candidates.push_back({spec.action, spec.confidence, false});
    }
    if (resp.candidates.empty()) {
        throw EmptyAfterFiltering("task '" + task_id_ + "': every scripted candidate for \"" +
                                  req.subgoal + "\" is excluded");
    }

    flag_unresolved(resp, req.observation);

    if (config_.injection && config_.injection->rate > 0.0) {
        const auto& inj = *config_.injection;
        std::uint64_t state = request_seed(req);
        for (std::size_t i = 0; i < resp.candidates.size(); ++i) {
            auto& cand = resp.candidates[i];
            if (cand.unresolved) continue; // already a hallucination
            if (unit_draw(state) >= inj.rate) continue;
            Action phantom;
            phantom.op = OperationKind::Click;
            phantom.element = "phantom_" + to_hex(splitmix64(state ^ (i + 1)), 8);
            cand.action = phantom;
            cand.confidence =
                inj.confidence_min + (inj.confidence_max - inj.confidence_min) * unit_draw(state);
            cand.unresolved = true;
        }
    }
    return resp;
}

EvaluationResponse ScriptedBackend::evaluate_state(const EvaluationRequest& req) {
    for (const auto& rule : script_.evaluation) {
        const auto& when = rule.when;
        if (!when.matches_observation(req.observation)) continue;
        if (!subgoal_matches(when, req.subgoal)) continue;
        if (when.stopped && req.stopped != *when.stopped) continue;
        if (when.answer_equals && req.stop_answer != *when.answer_equals) continue;
        if (when.answer_contains &&
            req.stop_answer.find(*when.answer_contains) == std::string::npos) {
            continue;
        }
        EvaluationResponse out;
        out.s_base = clamp_score(rule.score, nullptr);
        out.subgoal_complete = rule.subgoal_complete;
        out.task_complete = rule.task_complete;
        out.rationale = rule.rationale;
        return out;
    }
    throw MalformedOutput("task '" + task_id_ + "': no evaluation rule matches " +
                          req.observation.digest());
}

ScriptedProviderSource::ScriptedProviderSource(const std::vector<webenv::FixtureBundle>& bundles,
                                               ScriptedBackendConfig config) {
    for (const auto& bundle : bundles) {
        backends_[bundle.task.id] =
            std::make_unique<ScriptedBackend>(bundle.task.id, bundle.script, config);
    }
}

AgentProviders ScriptedProviderSource::bind(const std::string& task_id) {
    auto it = backends_.find(task_id);
    if (it == backends_.end()) {
        throw ConfigError("no scripted providers for task '" + task_id + "'");
    }
    return it->second->providers();
}

} // namespace webuq::agents
