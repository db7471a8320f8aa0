#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "webuq/types.hpp"

namespace webuq::agents {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Transport types for the four agent roles
// ---------------------------------------------------------------------------

struct AnalysisRequest {
    std::string instruction;
    Observation observation;
    ExecutionHistory history;
};

/// Raw analysis output. Range validation and clamping happen in the
/// planner; backends only guarantee a parseable shape.
struct AnalysisResponse {
    std::vector<std::string> remaining_objectives;
    double u_plan = 0.0;
};

enum class PlanKind { Explicit, Implicit };

struct PlanRequest {
    std::vector<std::string> objectives; // non-empty
    Observation observation;
    PlanKind kind = PlanKind::Explicit;
};

struct ReasoningRequest {
    std::string subgoal;
    Observation observation;
    std::vector<Action> excluded; // never returned back
    int k = 3;                    // at most this many candidates
};

struct ActionCandidate {
    Action action;
    double confidence = 0.0; // in [0, 1] at this boundary
    /// True when the action references an element id absent from the
    /// observation. Kept and flagged, never dropped: the search's
    /// epistemic pathway is what handles hallucinated candidates.
    bool unresolved = false;
};

struct ReasoningResponse {
    std::vector<ActionCandidate> candidates; // 1..k entries
};

struct EvaluationRequest {
    std::string subgoal;
    Observation observation;
    std::string instruction;
    bool stopped = false;    // the assessed state is post-Stop
    std::string stop_answer; // answer carried by that Stop
};

struct EvaluationResponse {
    double s_base = 0.0; // in [0, 10]
    bool subgoal_complete = false;
    bool task_complete = false;
    std::string rationale;
};

void to_json(json& j, const ActionCandidate& c);
void to_json(json& j, const ReasoningResponse& r);
void to_json(json& j, const AnalysisResponse& r);
void to_json(json& j, const EvaluationResponse& r);

// ---------------------------------------------------------------------------
// Provider interfaces
// ---------------------------------------------------------------------------

class AnalysisProvider {
public:
    virtual ~AnalysisProvider() = default;
    virtual AnalysisResponse analyze_task(const AnalysisRequest& req) = 0;
};

class PlanProvider {
public:
    virtual ~PlanProvider() = default;
    /// Explicit requests return the full decomposition (>= 1 subgoals);
    /// implicit requests return exactly one.
    virtual std::vector<std::string> generate_plan(const PlanRequest& req) = 0;
};

class ReasoningProvider {
public:
    virtual ~ReasoningProvider() = default;
    /// Returns 1..k candidates, none of them in req.excluded, each with
    /// confidence in [0, 1]. Throws EmptyAfterFiltering when the
    /// exclusion list eats everything it could propose.
    virtual ReasoningResponse propose_actions(const ReasoningRequest& req) = 0;
};

class EvaluationProvider {
public:
    virtual ~EvaluationProvider() = default;
    virtual EvaluationResponse evaluate_state(const EvaluationRequest& req) = 0;
};

/// The five agent roles an episode needs, as non-owning references.
/// A backend typically implements all interfaces and is referenced here
/// several times.
struct AgentProviders {
    AnalysisProvider* analysis = nullptr;
    PlanProvider* explicit_planner = nullptr;
    PlanProvider* implicit_planner = nullptr;
    ReasoningProvider* reasoning = nullptr;
    EvaluationProvider* evaluation = nullptr;

    void validate() const; // throws ConfigError unless all five are set
};

/// Hands out the provider bundle for one task. The scripted source binds
/// a per-task script; the live source returns the same stateless client
/// for every task.
class ProviderSource {
public:
    virtual ~ProviderSource() = default;
    virtual AgentProviders bind(const std::string& task_id) = 0;
};

// Boundary validation shared by backends: confidence and score clamping,
// unresolved-element flagging.
double clamp_confidence(double c, std::vector<std::string>* warnings);
double clamp_score(double s, std::vector<std::string>* warnings);
void flag_unresolved(ReasoningResponse& resp, const Observation& obs);

} // namespace webuq::agents
