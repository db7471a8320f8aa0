#include "webuq/harness.hpp"

#include "webuq/errors.hpp"
#include "webuq/trace.hpp"
#include "webuq/util.hpp"
#include "webuq/webenv.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <thread>

namespace webuq::harness {

const char* to_string(BackendKind k) {
    return k == BackendKind::Scripted ? "scripted" : "live";
}

BackendKind backend_kind_from_string(const std::string& s) {
    if (s == "scripted") return BackendKind::Scripted;
    if (s == "live") return BackendKind::Live;
    throw ConfigError("unknown backend kind: " + s);
}

void RunConfig::validate() const {
    search.validate();
    if (!(planner.delta >= 0.0 && planner.delta <= 1.0)) {
        throw ConfigError("delta must be in [0, 1]");
    }
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (max_steps_cap < 0) throw ConfigError("max_steps must be >= 0");
    if (injection && !(injection->rate >= 0.0 && injection->rate <= 1.0)) {
        throw ConfigError("injection rate must be in [0, 1]");
    }
}

void to_json(json& j, const RunConfig& c) {
    j = json{
        {"planner", c.planner},
        {"search", c.search},
        {"backend", to_string(c.backend)},
        {"llm", c.llm},
        {"fixtures", c.fixtures_path},
        {"max_steps", c.max_steps_cap},
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"jobs", c.jobs},
    };
    if (c.injection) {
        j["injection"] = {{"rate", c.injection->rate},
                          {"confidence_min", c.injection->confidence_min},
                          {"confidence_max", c.injection->confidence_max}};
    }
}

void from_json(const json& j, RunConfig& c) {
    if (j.contains("planner")) c.planner = j.at("planner").get<planner::PlannerConfig>();
    if (j.contains("search")) c.search = j.at("search").get<mcts::SearchConfig>();
    if (j.contains("backend")) c.backend = backend_kind_from_string(j.at("backend").get<std::string>());
    if (j.contains("llm")) c.llm = j.at("llm").get<agents::LlmBackendConfig>();
    if (j.contains("injection")) {
        agents::HallucinationInjection inj;
        inj.rate = j.at("injection").value("rate", 0.0);
        inj.confidence_min = j.at("injection").value("confidence_min", 0.1);
        inj.confidence_max = j.at("injection").value("confidence_max", 0.35);
        c.injection = inj;
    }
    c.fixtures_path = j.value("fixtures", c.fixtures_path);
    c.max_steps_cap = j.value("max_steps", c.max_steps_cap);
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.jobs = j.value("jobs", c.jobs);
}

// ---------------------------------------------------------------------------
// Episode loop
// ---------------------------------------------------------------------------

namespace {

json record(const char* type) {
    json j;
    j["v"] = trace::kSchemaVersion;
    j["type"] = type;
    return j;
}

} // namespace

EpisodeTrace run_episode(const webenv::TaskFixture& fixture, const agents::AgentProviders& providers,
                         const RunConfig& cfg) {
    cfg.validate();
    providers.validate();

    const auto t0 = std::chrono::steady_clock::now();
    EpisodeTrace ep;
    ep.task_id = fixture.id;

    const int max_steps = cfg.max_steps_cap > 0 ? std::min(cfg.max_steps_cap, fixture.max_steps)
                                                : fixture.max_steps;

    auto start = record("episode_start");
    start["task"] = fixture.id;
    start["instruction"] = fixture.instruction;
    start["seed"] = cfg.seed;
    start["max_steps"] = max_steps;
    ep.records.push_back(start);

    webenv::WebEnvironment env(std::make_shared<const webenv::TaskFixture>(fixture));
    Observation obs = env.observe();
    ExecutionHistory history;

    auto accumulate_search = [&](const mcts::SearchOutcome& outcome) {
        ep.searches += 1;
        ep.expansions += outcome.expansions_used;
        if (outcome.accepted) ep.accepted_searches += 1;
        auto& t = ep.search_totals;
        const auto& s = outcome.stats;
        t.accepts += s.accepts;
        t.prunes += s.prunes;
        t.backtracks += s.backtracks;
        t.continues += s.continues;
        t.regenerations += s.regenerations;
        t.empty_filterings += s.empty_filterings;
        t.dead_end_prunes += s.dead_end_prunes;
        t.terminal_prunes += s.terminal_prunes;
        t.evaluations += s.evaluations;
    };

    std::string abort_reason;
    try {
        while (true) {
            if (env.finished()) break;
            if (env.step_counter() >= max_steps) break;

            ep.planning_steps += 1;
            const int step = ep.planning_steps;

            // (1) task analysis, (2) mode selection
            planner::PlannerMeta meta;
            const auto analysis =
                planner::analyze(fixture.instruction, obs, history, *providers.analysis, &meta);
            const auto mode = planner::select_mode(analysis.u_plan, cfg.planner);

            auto arec = record("analysis");
            arec["step"] = step;
            arec["env_step"] = env.step_counter();
            arec["observation"] = obs.digest();
            arec["u_plan"] = analysis.u_plan;
            arec["objectives"] = analysis.remaining_objectives;
            arec["mode"] = planner::to_string(mode);
            if (meta.retries > 0) arec["retries"] = meta.retries;
            if (!meta.warnings.empty()) arec["warnings"] = meta.warnings;
            ep.records.push_back(arec);

            if (analysis.remaining_objectives.empty()) {
                // Analysis judges the task complete; nothing left to plan.
                auto erec = record("event");
                erec["step"] = step;
                erec["kind"] = "objectives_exhausted_stop";
                ep.records.push_back(erec);
                Action stop{OperationKind::Stop, "", ""};
                obs = env.apply(stop);
                history.append({env.step_counter(), "(analysis judged task complete)", stop,
                                obs.digest(), 0.0});
                break;
            }

            // (3) subgoal generation
            const auto subgoal = planner::next_subgoal(analysis, obs, mode, providers, &meta);
            auto grec = record("subgoal");
            grec["step"] = step;
            grec["description"] = subgoal.description;
            grec["origin_mode"] = planner::to_string(subgoal.origin_mode);
            if (subgoal.index_in_plan) grec["index_in_plan"] = *subgoal.index_in_plan;
            if (!meta.discarded_plan_tail.empty()) grec["discarded_tail"] = meta.discarded_plan_tail;
            ep.records.push_back(grec);

            // (4) action search on a snapshot of the live state
            mcts::Searcher searcher(providers, cfg.search);
            const auto outcome =
                searcher.search(env.snapshot(), obs, subgoal.description, fixture.instruction);
            accumulate_search(outcome);

            auto srec = record("search");
            srec["step"] = step;
            srec["accepted"] = outcome.accepted;
            srec["expansions_used"] = outcome.expansions_used;
            srec["committed_path"] = outcome.committed_path;
            srec["root_stats"] = outcome.root_stats;
            srec["stats"] = outcome.stats;
            if (outcome.acceptance_eval) srec["eval"] = *outcome.acceptance_eval;
            ep.records.push_back(srec);

            double step_reward = 0.0;
            if (outcome.acceptance_eval) {
                step_reward = outcome.acceptance_eval->s_base;
            } else {
                for (const auto& es : outcome.root_stats) {
                    if (es.action == outcome.committed_action) step_reward = es.value;
                }
            }

            // (5) execute the committed path on the real environment
            for (const auto& action : outcome.committed_path) {
                obs = env.apply(action);
                ep.env_steps = env.step_counter();

                auto xrec = record("action");
                xrec["step"] = step;
                xrec["env_step"] = env.step_counter();
                xrec["action"] = action;
                xrec["status"] = to_string(obs.status);
                xrec["page"] = obs.page_id;
                xrec["observation"] = obs.digest();
                if (obs.status == ObservationStatus::ExecutionError) xrec["error"] = obs.error_text;
                ep.records.push_back(xrec);

                history.append({env.step_counter(), subgoal.description, action, obs.digest(),
                                step_reward});

                if (obs.status == ObservationStatus::ExecutionError) {
                    // Abort the rest of the committed path and go back to
                    // the analysis step with the fresh observation.
                    auto erec = record("event");
                    erec["step"] = step;
                    erec["kind"] = "replan_after_execution_error";
                    erec["detail"] = obs.error_text;
                    ep.records.push_back(erec);
                    break;
                }
                if (env.finished()) break;
                if (env.step_counter() >= max_steps) break;
            }
        }
        ep.success = env.finished() && env.judge();
        if (!ep.success) {
            ep.failure_reason = env.finished() ? "success predicate not satisfied"
                                               : "step limit reached without stopping";
        }
    } catch (const ProviderOutputInvalid& e) {
        abort_reason = std::string{"provider output invalid: "} + e.what();
    } catch (const BackendUnavailable& e) {
        abort_reason = std::string{"backend unavailable: "} + e.what();
    } catch (const MalformedOutput& e) {
        abort_reason = std::string{"malformed provider output: "} + e.what();
    } catch (const NoViableAction& e) {
        abort_reason = std::string{"no viable action: "} + e.what();
    }

    if (!abort_reason.empty()) {
        // Agent-side failures count as task failures, same as the
        // success-rate accounting used for reporting.
        ep.success = false;
        ep.failure_reason = abort_reason;
    }

    ep.env_steps = env.step_counter();
    ep.duration_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                         .count();

    auto end = record("episode_end");
    end["verdict"] = ep.success ? "success" : "failure";
    end["env_steps"] = ep.env_steps;
    end["planning_steps"] = ep.planning_steps;
    if (!ep.failure_reason.empty()) end["error"] = ep.failure_reason;
    end["duration_ms"] = ep.duration_ms;
    ep.records.push_back(end);
    return ep;
}

// ---------------------------------------------------------------------------
// Suite runner
// ---------------------------------------------------------------------------

int SuiteReport::successes() const {
    int n = 0;
    for (const auto& t : tasks) n += t.success ? 1 : 0;
    return n;
}

double SuiteReport::sr_percent() const {
    if (tasks.empty()) return 0.0;
    return static_cast<double>(successes()) * 100.0 / static_cast<double>(total());
}

double SuiteReport::duration_mean_ms() const {
    if (tasks.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& t : tasks) sum += t.duration_ms;
    return sum / static_cast<double>(tasks.size());
}

double SuiteReport::duration_median_ms() const {
    if (tasks.empty()) return 0.0;
    std::vector<double> ds;
    ds.reserve(tasks.size());
    for (const auto& t : tasks) ds.push_back(t.duration_ms);
    std::sort(ds.begin(), ds.end());
    const auto n = ds.size();
    return n % 2 == 1 ? ds[n / 2] : 0.5 * (ds[n / 2 - 1] + ds[n / 2]);
}

double SuiteReport::mean_expansions_per_search() const {
    int searches = 0;
    int expansions = 0;
    for (const auto& t : tasks) {
        searches += t.searches;
        expansions += t.expansions;
    }
    return searches == 0 ? 0.0 : static_cast<double>(expansions) / static_cast<double>(searches);
}

double SuiteReport::acceptance_rate() const {
    int searches = 0;
    int accepted = 0;
    for (const auto& t : tasks) {
        searches += t.searches;
        accepted += t.accepted_searches;
    }
    return searches == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(searches);
}

json SuiteReport::to_json(bool include_timing) const {
    json j;
    j["schema"] = "report/1";
    j["seed"] = seed;
    j["config"] = config_echo;
    j["total"] = total();
    j["successes"] = successes();
    j["sr_percent"] = sr_percent();
    json tasks_json = json::array();
    for (const auto& t : tasks) {
        json tj{
            {"task", t.task_id},
            {"verdict", t.success ? "success" : "failure"},
            {"env_steps", t.env_steps},
            {"planning_steps", t.planning_steps},
            {"searches", t.searches},
            {"expansions", t.expansions},
            {"accepted_searches", t.accepted_searches},
            {"search_stats", t.search_totals},
        };
        if (!t.failure_reason.empty()) tj["reason"] = t.failure_reason;
        if (include_timing) tj["duration_ms"] = t.duration_ms;
        tasks_json.push_back(tj);
    }
    j["tasks"] = tasks_json;
    mcts::SearchStats agg;
    int searches = 0;
    for (const auto& t : tasks) {
        searches += t.searches;
        agg.accepts += t.search_totals.accepts;
        agg.prunes += t.search_totals.prunes;
        agg.backtracks += t.search_totals.backtracks;
        agg.continues += t.search_totals.continues;
        agg.regenerations += t.search_totals.regenerations;
        agg.empty_filterings += t.search_totals.empty_filterings;
        agg.dead_end_prunes += t.search_totals.dead_end_prunes;
        agg.terminal_prunes += t.search_totals.terminal_prunes;
        agg.evaluations += t.search_totals.evaluations;
    }
    j["search"] = json{
        {"searches", searches},
        {"mean_expansions", mean_expansions_per_search()},
        {"acceptance_rate", acceptance_rate()},
        {"stats", agg},
    };
    if (include_timing) {
        j["timing"] = json{{"duration_mean_ms", duration_mean_ms()},
                           {"duration_median_ms", duration_median_ms()}};
    }
    return j;
}

std::string SuiteReport::render_text() const {
    std::ostringstream out;
    out << "suite: " << successes() << '/' << total() << " succeeded, SR = ";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", sr_percent());
    out << buf << '\n';
    for (const auto& t : tasks) {
        out << "  " << (t.success ? "PASS" : "FAIL") << ' ' << t.task_id << " (" << t.env_steps
            << " steps, " << t.searches << " searches, " << t.expansions << " expansions)";
        if (!t.success) out << " -- " << t.failure_reason;
        out << '\n';
    }
    std::snprintf(buf, sizeof(buf), "%.1f", duration_mean_ms());
    out << "mean episode duration: " << buf << " ms\n";
    return out.str();
}

SuiteReport run_suite(const std::vector<webenv::FixtureBundle>& bundles,
                      agents::ProviderSource& source, const RunConfig& cfg) {
    cfg.validate();
    if (bundles.empty()) {
        throw ConfigError("run_suite requires at least one fixture");
    }

    std::vector<EpisodeTrace> traces(bundles.size());
    const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(bundles.size())));

    auto run_one = [&](std::size_t i) {
        const auto providers = source.bind(bundles[i].task.id);
        traces[i] = run_episode(bundles[i].task, providers, cfg);
    };

    if (jobs == 1) {
        for (std::size_t i = 0; i < bundles.size(); ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(jobs));
        for (int w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < bundles.size(); i = next.fetch_add(1)) {
                    run_one(i);
                }
            });
        }
        for (auto& t : workers) t.join();
    }

    SuiteReport report;
    report.seed = cfg.seed;
    report.config_echo = json(cfg);
    for (const auto& ep : traces) {
        report.tasks.push_back({ep.task_id, ep.success, ep.failure_reason, ep.env_steps,
                                ep.planning_steps, ep.searches, ep.expansions, ep.accepted_searches,
                                ep.search_totals, ep.duration_ms});
    }
    // bundles arrive sorted by task id; keep the report in the same order

    write_outputs(cfg, report, traces);
    return report;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

json SweepResult::to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows) {
        rows_json.push_back(json{{"delta", r.delta},
                                 {"tau", r.tau},
                                 {"successes", r.successes},
                                 {"total", r.total},
                                 {"sr_percent", r.sr_percent}});
    }
    return json{{"schema", "sweep/1"}, {"rows", rows_json}};
}

std::string SweepResult::render_text() const {
    std::ostringstream out;
    out << "delta   tau     SR%\n";
    for (const auto& r : rows) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%-7.2f %-7.2f %.1f (%d/%d)\n", r.delta, r.tau,
                      r.sr_percent, r.successes, r.total);
        out << buf;
    }
    return out.str();
}

SweepResult sweep(const std::vector<webenv::FixtureBundle>& bundles, agents::ProviderSource& source,
                  const RunConfig& base_cfg, const std::vector<double>& deltas,
                  const std::vector<double>& taus) {
    if (deltas.empty() || taus.empty()) {
        throw ConfigError("sweep requires at least one delta and one tau");
    }
    for (double d : deltas) {
        if (!(d >= 0.0 && d <= 1.0)) throw ConfigError("sweep delta out of [0, 1]");
    }
    for (double t : taus) {
        if (!(t >= 0.0 && t <= 10.0)) throw ConfigError("sweep tau out of [0, 10]");
    }

    SweepResult result;
    for (double d : deltas) {
        for (double t : taus) {
            RunConfig cfg = base_cfg;
            cfg.planner.delta = d;
            cfg.search.tau = t;
            cfg.output_dir.clear(); // per-point outputs stay in memory
            const auto report = run_suite(bundles, source, cfg);
            result.rows.push_back({d, t, report.successes(), report.total(), report.sr_percent()});
        }
    }
    return result;
}

void write_outputs(const RunConfig& cfg, const SuiteReport& report,
                   const std::vector<EpisodeTrace>& traces) {
    if (cfg.output_dir.empty()) return;
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(cfg.output_dir) / "traces");
    for (const auto& ep : traces) {
        trace::write_trace_file((fs::path(cfg.output_dir) / "traces" / (ep.task_id + ".trace")).string(),
                                ep.records);
    }
    write_text_file((fs::path(cfg.output_dir) / "report.json").string(),
                    report.to_json(true).dump(2) + "\n");
}

} // namespace webuq::harness
