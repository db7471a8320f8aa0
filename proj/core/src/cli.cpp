#include "webuq/cli.hpp"

#include "CLI11.hpp"
#include "webuq/errors.hpp"
#include "webuq/harness.hpp"
#include "webuq/trace.hpp"
#include "webuq/util.hpp"

#include <iostream>
#include <memory>
#include <sstream>

namespace webuq::cli {

namespace {

using harness::BackendKind;
using harness::RunConfig;

struct CommonFlags {
    std::string config_file;
    std::string fixtures;
    std::string backend;
    std::string out_dir;
    std::string mode_override;
    std::uint64_t seed = 0;
    int jobs = 0;
    int max_steps = -1;
    double delta = -1.0;
    double tau = -1.0;
    double w_puct = -1.0;
    int k = 0;
    int max_expansions = 0;
    double theta_eu = -1.0;
    double theta_au = -1.0;
    bool uncertainty_blind = false;
    bool commit_root_only = false;
    double inject_rate = -1.0;
    double inject_conf_min = -1.0;
    double inject_conf_max = -1.0;
    std::string endpoint;
    std::string model;
    double temperature = -1.0;
    std::string prompt_dir;
    int timeout_ms = 0;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f, bool scalar_delta_tau = true) {
    cmd->add_option("--config", f.config_file, "JSON config file; flags override its fields");
    cmd->add_option("--fixtures", f.fixtures, "fixture file or directory");
    cmd->add_option("--backend", f.backend, "scripted | live");
    cmd->add_option("--seed", f.seed, "run seed");
    cmd->add_option("--out", f.out_dir, "output directory for traces and report");
    cmd->add_option("--jobs", f.jobs, "episodes to run in parallel");
    cmd->add_option("--max-steps", f.max_steps, "cap on environment steps per task");
    if (scalar_delta_tau) {
        cmd->add_option("--delta", f.delta, "planning-mode switch threshold in [0, 1]");
        cmd->add_option("--tau", f.tau, "acceptance threshold on base scores in [0, 10]");
    }
    cmd->add_option("--w-puct", f.w_puct, "exploration weight");
    cmd->add_option("--k", f.k, "candidates per expansion");
    cmd->add_option("--max-expansions", f.max_expansions, "expansion budget per subgoal");
    cmd->add_option("--theta-eu", f.theta_eu, "epistemic high threshold");
    cmd->add_option("--theta-au", f.theta_au, "aleatoric high threshold");
    cmd->add_option("--mode-override", f.mode_override, "adaptive | force_explicit | force_implicit");
    cmd->add_flag("--uncertainty-blind", f.uncertainty_blind,
                  "ablation: uniform priors, no reward modulation");
    cmd->add_flag("--commit-root-only", f.commit_root_only,
                  "acceptance commits only the root action");
    cmd->add_option("--inject-rate", f.inject_rate,
                    "scripted backend: hallucination injection rate in [0, 1]");
    cmd->add_option("--inject-conf-min", f.inject_conf_min, "injected confidence lower bound");
    cmd->add_option("--inject-conf-max", f.inject_conf_max, "injected confidence upper bound");
    cmd->add_option("--endpoint", f.endpoint, "live backend base URL");
    cmd->add_option("--model", f.model, "live backend model name");
    cmd->add_option("--temperature", f.temperature, "live backend sampling temperature");
    cmd->add_option("--prompt-dir", f.prompt_dir, "prompt template directory");
    cmd->add_option("--timeout-ms", f.timeout_ms, "live backend request timeout");
}

RunConfig build_config(const CLI::App* cmd, const CommonFlags& f, bool scalar_delta_tau = true) {
    RunConfig cfg;
    if (!f.config_file.empty()) {
        json j;
        try {
            j = json::parse(read_text_file(f.config_file));
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("config file " + f.config_file + ": " + e.what());
        }
        cfg = j.get<RunConfig>();
    }
    auto set = [&](const char* name) {
        return cmd->get_option_no_throw(name) != nullptr && cmd->count(name) > 0;
    };
    if (set("--fixtures")) cfg.fixtures_path = f.fixtures;
    if (set("--backend")) cfg.backend = harness::backend_kind_from_string(f.backend);
    if (set("--seed")) cfg.seed = f.seed;
    if (set("--out")) cfg.output_dir = f.out_dir;
    if (set("--jobs")) cfg.jobs = f.jobs;
    if (set("--max-steps")) cfg.max_steps_cap = f.max_steps;
    if (scalar_delta_tau) {
        if (set("--delta")) cfg.planner.delta = f.delta;
        if (set("--tau")) cfg.search.tau = f.tau;
    }
    if (set("--w-puct")) cfg.search.w_puct = f.w_puct;
    if (set("--k")) cfg.search.k_candidates = f.k;
    if (set("--max-expansions")) cfg.search.max_expansions = f.max_expansions;
    if (set("--theta-eu")) cfg.search.thresholds.theta_eu = f.theta_eu;
    if (set("--theta-au")) cfg.search.thresholds.theta_au = f.theta_au;
    if (set("--mode-override")) {
        cfg.planner.mode_override = planner::mode_override_from_string(f.mode_override);
    }
    if (set("--uncertainty-blind")) cfg.search.uncertainty_blind = true;
    if (set("--commit-root-only")) cfg.search.commit_root_action_only = true;
    if (set("--inject-rate")) {
        agents::HallucinationInjection inj = cfg.injection.value_or(agents::HallucinationInjection{});
        inj.rate = f.inject_rate;
        cfg.injection = inj;
    }
    if (set("--inject-conf-min") || set("--inject-conf-max")) {
        agents::HallucinationInjection inj = cfg.injection.value_or(agents::HallucinationInjection{});
        if (set("--inject-conf-min")) inj.confidence_min = f.inject_conf_min;
        if (set("--inject-conf-max")) inj.confidence_max = f.inject_conf_max;
        cfg.injection = inj;
    }
    if (set("--endpoint")) cfg.llm.endpoint = f.endpoint;
    if (set("--model")) cfg.llm.model = f.model;
    if (set("--temperature")) cfg.llm.temperature = f.temperature;
    if (set("--prompt-dir")) cfg.llm.prompt_dir = f.prompt_dir;
    if (set("--timeout-ms")) cfg.llm.timeout_ms = f.timeout_ms;
    cfg.validate();
    return cfg;
}

std::vector<webenv::FixtureBundle> load_bundles(const std::string& path) {
    if (path.empty()) {
        throw ConfigError("no fixtures given (use --fixtures or a config file)");
    }
    namespace fs = std::filesystem;
    if (fs::is_directory(path)) {
        return webenv::load_fixture_dir(path);
    }
    std::vector<webenv::FixtureBundle> bundles;
    bundles.push_back(webenv::load_fixture_file(path));
    return bundles;
}

std::unique_ptr<agents::ProviderSource> make_source(const RunConfig& cfg,
                                                    const std::vector<webenv::FixtureBundle>& bundles) {
    if (cfg.backend == BackendKind::Scripted) {
        agents::ScriptedBackendConfig sc;
        sc.seed = cfg.seed;
        sc.injection = cfg.injection;
        return std::make_unique<agents::ScriptedProviderSource>(bundles, sc);
    }
    return std::make_unique<agents::LiveProviderSource>(cfg.llm);
}

std::vector<double> parse_grid(const std::string& csv, const char* what) {
    std::vector<double> out;
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t pos = 0;
            const double v = std::stod(item, &pos);
            if (pos != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError(std::string{"bad "} + what + " grid value: " + item);
        }
    }
    if (out.empty()) throw ConfigError(std::string{what} + " grid is empty");
    return out;
}

int cmd_run(const CLI::App* cmd, const CommonFlags& flags) {
    const auto cfg = build_config(cmd, flags);
    const auto bundles = load_bundles(cfg.fixtures_path);
    auto source = make_source(cfg, bundles);
    const auto report = harness::run_suite(bundles, *source, cfg);
    std::cout << report.render_text();
    if (!cfg.output_dir.empty()) {
        std::cout << "report written to " << cfg.output_dir << "/report.json\n";
    }
    return 0;
}

int cmd_episode(const CLI::App* cmd, const CommonFlags& flags, const std::string& fixture_path) {
    auto cfg = build_config(cmd, flags);
    if (!fixture_path.empty()) cfg.fixtures_path = fixture_path;
    auto bundles = load_bundles(cfg.fixtures_path);
    if (bundles.size() != 1) {
        throw ConfigError("episode runs exactly one fixture; got " +
                          std::to_string(bundles.size()));
    }
    auto source = make_source(cfg, bundles);
    const auto providers = source->bind(bundles[0].task.id);
    const auto ep = harness::run_episode(bundles[0].task, providers, cfg);
    std::cout << trace::render_transcript(ep.records);
    if (!cfg.output_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(fs::path(cfg.output_dir) / "traces");
        const auto path = (fs::path(cfg.output_dir) / "traces" / (ep.task_id + ".trace")).string();
        trace::write_trace_file(path, ep.records);
        std::cout << "trace written to " << path << '\n';
    }
    return 0;
}

int cmd_sweep(const CLI::App* cmd, const CommonFlags& flags, const std::string& delta_csv,
              const std::string& tau_csv) {
    const auto cfg = build_config(cmd, flags, /*scalar_delta_tau=*/false);
    const auto deltas = delta_csv.empty() ? std::vector<double>{cfg.planner.delta}
                                          : parse_grid(delta_csv, "delta");
    const auto taus = tau_csv.empty() ? std::vector<double>{cfg.search.tau}
                                      : parse_grid(tau_csv, "tau");
    const auto bundles = load_bundles(cfg.fixtures_path);
    auto source = make_source(cfg, bundles);
    const auto result = harness::sweep(bundles, *source, cfg, deltas, taus);
    std::cout << result.render_text();
    if (!cfg.output_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(cfg.output_dir);
        const auto path = (fs::path(cfg.output_dir) / "sweep.json").string();
        write_text_file(path, result.to_json().dump(2) + "\n");
        std::cout << "sweep table written to " << path << '\n';
    }
    return 0;
}

int cmd_validate(const std::string& fixtures) {
    const auto bundles = load_bundles(fixtures);
    bool warned = false;
    for (const auto& b : bundles) {
        const auto missing = b.script.missing_catch_alls();
        std::cout << "OK " << b.task.id << " (" << b.task.pages.size() << " pages, max_steps "
                  << b.task.max_steps << ")";
        if (!missing.empty()) {
            warned = true;
            std::cout << " -- warning: no catch-all rule in:";
            for (const auto& m : missing) std::cout << ' ' << m;
        }
        std::cout << '\n';
    }
    std::cout << bundles.size() << " fixture(s) valid" << (warned ? " (with warnings)" : "")
              << '\n';
    return 0;
}

int cmd_replay(const std::string& trace_path) {
    const auto records = trace::read_trace_file(trace_path);
    std::cout << trace::render_transcript(records);
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"uncertainty-aware web-agent search harness"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    auto* run = app.add_subcommand("run", "run a fixture suite and report the success rate");
    add_common_flags(run, run_flags);

    CommonFlags ep_flags;
    std::string ep_fixture;
    auto* episode = app.add_subcommand("episode", "run a single task and print its transcript");
    episode->add_option("fixture", ep_fixture, "fixture file");
    add_common_flags(episode, ep_flags);

    CommonFlags sweep_flags;
    std::string sweep_deltas;
    std::string sweep_taus;
    auto* sweep_cmd = app.add_subcommand("sweep", "grid of suite runs over delta and tau");
    sweep_cmd->add_option("--delta", sweep_deltas, "comma-separated delta grid values");
    sweep_cmd->add_option("--tau", sweep_taus, "comma-separated tau grid values");
    add_common_flags(sweep_cmd, sweep_flags, /*scalar_delta_tau=*/false);

    std::string validate_fixtures;
    auto* validate = app.add_subcommand("validate-fixtures", "check fixture files and scripts");
    validate->add_option("--fixtures", validate_fixtures, "fixture file or directory")->required();

    std::string replay_path;
    auto* replay = app.add_subcommand("replay", "re-render a recorded trace, no providers needed");
    replay->add_option("trace", replay_path, "trace file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) return cmd_run(run, run_flags);
        if (episode->parsed()) return cmd_episode(episode, ep_flags, ep_fixture);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_cmd, sweep_flags, sweep_deltas, sweep_taus);
        if (validate->parsed()) return cmd_validate(validate_fixtures);
        if (replay->parsed()) return cmd_replay(replay_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const FixtureInvalid& e) {
        std::cerr << "fixture error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}

} // namespace webuq::cli
