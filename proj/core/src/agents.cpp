#include "webuq/agents.hpp"

#include "webuq/errors.hpp"
#include "webuq/util.hpp"

#include <algorithm>

namespace webuq::agents {

void to_json(json& j, const ActionCandidate& c) {
    j = json{{"action", c.action}, {"confidence", c.confidence}};
    if (c.unresolved) j["unresolved"] = true;
}

void to_json(json& j, const ReasoningResponse& r) {
    j = json{{"candidates", r.candidates}};
}

void to_json(json& j, const AnalysisResponse& r) {
    j = json{{"remaining", r.remaining_objectives}, {"uncertainty", r.u_plan}};
}

void to_json(json& j, const EvaluationResponse& r) {
    j = json{{"score", r.s_base},
             {"subgoal_complete", r.subgoal_complete},
             {"task_complete", r.task_complete}};
    if (!r.rationale.empty()) j["rationale"] = r.rationale;
}

void AgentProviders::validate() const {
    if (!analysis || !explicit_planner || !implicit_planner || !reasoning || !evaluation) {
        throw ConfigError("all five agent providers must be present");
    }
}

double clamp_confidence(double c, std::vector<std::string>* warnings) {
    const double clamped = std::clamp(c, 0.0, 1.0);
    if (clamped != c && warnings) {
        warnings->push_back("confidence " + format_double(c) + " clamped to " +
                            format_double(clamped));
    }
    return clamped;
}

double clamp_score(double s, std::vector<std::string>* warnings) {
    const double clamped = std::clamp(s, 0.0, 10.0);
    if (clamped != s && warnings) {
        warnings->push_back("score " + format_double(s) + " clamped to " + format_double(clamped));
    }
    return clamped;
}

void flag_unresolved(ReasoningResponse& resp, const Observation& obs) {
    for (auto& c : resp.candidates) {
        c.unresolved = c.action.needs_element() && !obs.has_element(c.action.element);
    }
}

} // namespace webuq::agents
