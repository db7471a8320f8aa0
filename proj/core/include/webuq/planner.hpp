#pragma once

#include <optional>
#include <string>
#include <vector>

#include "webuq/agents.hpp"
#include "webuq/types.hpp"

namespace webuq::planner {

using json = nlohmann::ordered_json;

enum class PlanningMode { Explicit, Implicit };
enum class ModeOverride { Adaptive, ForceExplicit, ForceImplicit };

const char* to_string(PlanningMode m);
const char* to_string(ModeOverride m);
ModeOverride mode_override_from_string(const std::string& s);

/// Remaining objectives plus the scalar task uncertainty driving the
/// planning-mode switch. Objectives may be empty only when the task is
/// judged complete.
struct TaskAnalysis {
    std::vector<std::string> remaining_objectives;
    double u_plan = 0.0; // in [0, 1] after clamping
};

void to_json(json& j, const TaskAnalysis& a);

struct Subgoal {
    std::string description;
    PlanningMode origin_mode = PlanningMode::Implicit;
    std::optional<int> index_in_plan; // explicit mode only
};

void to_json(json& j, const Subgoal& g);

struct PlannerConfig {
    double delta = 0.4; // mode-switch threshold
    ModeOverride mode_override = ModeOverride::Adaptive;
};

void to_json(json& j, const PlannerConfig& c);
void from_json(const json& j, PlannerConfig& c);

/// Side information a caller may want to log: clamp warnings, retry
/// counts, and the discarded tail of an explicit plan.
struct PlannerMeta {
    int retries = 0;
    std::vector<std::string> warnings;
    std::vector<std::string> discarded_plan_tail;
};

/// Runs the analysis provider and validates its output: u_plan is
/// clamped into [0, 1] (with a warning), non-finite values count as
/// malformed. A malformed response gets one repair retry; a second
/// failure raises ProviderOutputInvalid.
TaskAnalysis analyze(const std::string& instruction, const Observation& observation,
                     const ExecutionHistory& history, agents::AnalysisProvider& provider,
                     PlannerMeta* meta = nullptr);

/// Pure step function: Explicit iff u_plan <= delta (boundary goes
/// Explicit). Force overrides ignore u_plan entirely.
PlanningMode select_mode(double u_plan, const PlannerConfig& cfg);

/// Explicit mode asks for a full decomposition, commits to the first
/// subgoal and discards the tail (logged via meta, never fed back).
/// Implicit mode asks for exactly the immediate subgoal.
Subgoal next_subgoal(const TaskAnalysis& analysis, const Observation& observation,
                     PlanningMode mode, const agents::AgentProviders& providers,
                     PlannerMeta* meta = nullptr);

} // namespace webuq::planner
