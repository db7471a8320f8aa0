#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "webuq/agents.hpp"
#include "webuq/fixture.hpp"
#include "webuq/llm_backend.hpp"
#include "webuq/mcts.hpp"
#include "webuq/planner.hpp"
#include "webuq/scripted_backend.hpp"

namespace webuq::harness {

using json = nlohmann::ordered_json;

enum class BackendKind { Scripted, Live };

const char* to_string(BackendKind k);
BackendKind backend_kind_from_string(const std::string& s);

struct RunConfig {
    planner::PlannerConfig planner;
    mcts::SearchConfig search;
    BackendKind backend = BackendKind::Scripted;
    agents::LlmBackendConfig llm;
    std::optional<agents::HallucinationInjection> injection;
    std::string fixtures_path; // file or directory of task fixtures
    int max_steps_cap = 0;     // 0: use each fixture's own limit
    std::uint64_t seed = 0;
    std::string output_dir; // empty: keep everything in memory
    int jobs = 1;

    void validate() const;
};

void to_json(json& j, const RunConfig& c);
void from_json(const json& j, RunConfig& c);

/// Full record of one task run: the staged trace records plus the
/// aggregates the suite report needs.
struct EpisodeTrace {
    std::string task_id;
    std::vector<json> records;
    bool success = false;
    std::string failure_reason; // empty on success
    int env_steps = 0;
    int planning_steps = 0;
    int searches = 0;
    int expansions = 0;
    int accepted_searches = 0;
    mcts::SearchStats search_totals;
    double duration_ms = 0.0;
};

struct SuiteReport {
    struct TaskResult {
        std::string task_id;
        bool success = false;
        std::string failure_reason;
        int env_steps = 0;
        int planning_steps = 0;
        int searches = 0;
        int expansions = 0;
        int accepted_searches = 0;
        mcts::SearchStats search_totals;
        double duration_ms = 0.0;
    };

    std::vector<TaskResult> tasks; // ordered by task id
    std::uint64_t seed = 0;
    json config_echo;

    int total() const { return static_cast<int>(tasks.size()); }
    int successes() const;
    /// successes / tasks * 100, computed from exact integer counts.
    double sr_percent() const;
    double duration_mean_ms() const;
    double duration_median_ms() const;
    double mean_expansions_per_search() const;
    double acceptance_rate() const;

    /// include_timing=false drops every wall-clock-derived field, which
    /// is the byte-comparable form.
    json to_json(bool include_timing = true) const;
    std::string render_text() const;
};

struct SweepResult {
    struct Row {
        double delta = 0.0;
        double tau = 0.0;
        int successes = 0;
        int total = 0;
        double sr_percent = 0.0;
    };
    std::vector<Row> rows;

    json to_json() const;
    std::string render_text() const;
};

/// Runs the analyze -> select mode -> subgoal -> search -> execute loop
/// for one task until the agent stops, the step limit runs out, or a
/// provider failure aborts the episode (which counts as a task failure).
EpisodeTrace run_episode(const webenv::TaskFixture& fixture, const agents::AgentProviders& providers,
                         const RunConfig& cfg);

/// Runs every fixture once, in task-id order, optionally across
/// cfg.jobs worker threads, and aggregates deterministically.
SuiteReport run_suite(const std::vector<webenv::FixtureBundle>& bundles,
                      agents::ProviderSource& source, const RunConfig& cfg);

/// One run_suite per (delta, tau) grid point, identical seed everywhere.
SweepResult sweep(const std::vector<webenv::FixtureBundle>& bundles, agents::ProviderSource& source,
                  const RunConfig& base_cfg, const std::vector<double>& deltas,
                  const std::vector<double>& taus);

/// Writes trace files (traces/<task>.trace) and report.json under
/// cfg.output_dir. No-op when output_dir is empty.
void write_outputs(const RunConfig& cfg, const SuiteReport& report,
                   const std::vector<EpisodeTrace>& traces);

} // namespace webuq::harness
