#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"
#include "webuq/errors.hpp"
#include "webuq/planner.hpp"

#include <random>

using namespace webuq;
using namespace webuq::planner;
using testsupport::FnProviders;

namespace {

Observation obs() {
    Observation o;
    o.page_id = "home";
    return o;
}

} // namespace

TEST_CASE("analyze passes validated provider output through") {
    FnProviders fp;
    fp.analysis.fn = [](const agents::AnalysisRequest&) {
        return agents::AnalysisResponse{{"sort by rating"}, 0.2};
    };
    const auto a = analyze("instr", obs(), {}, fp.analysis);
    CHECK(a.remaining_objectives == std::vector<std::string>{"sort by rating"});
    CHECK(a.u_plan == 0.2);
}

TEST_CASE("analyze clamps out-of-range uncertainty with a warning") {
    FnProviders fp;
    fp.analysis.fn = [](const agents::AnalysisRequest&) {
        return agents::AnalysisResponse{{"x"}, 1.7};
    };
    PlannerMeta meta;
    const auto a = analyze("instr", obs(), {}, fp.analysis, &meta);
    CHECK(a.u_plan == 1.0);
    REQUIRE(meta.warnings.size() == 1);
    CHECK(meta.warnings[0].find("clamped") != std::string::npos);

    fp.analysis.fn = [](const agents::AnalysisRequest&) {
        return agents::AnalysisResponse{{"x"}, -0.4};
    };
    CHECK(analyze("instr", obs(), {}, fp.analysis).u_plan == 0.0);
}

TEST_CASE("analyze retries once on malformed output, then fails typed") {
    FnProviders fp;
    int calls = 0;
    fp.analysis.fn = [&](const agents::AnalysisRequest&) -> agents::AnalysisResponse {
        ++calls;
        throw MalformedOutput("garbled");
    };
    CHECK_THROWS_AS(analyze("instr", obs(), {}, fp.analysis), ProviderOutputInvalid);
    CHECK(calls == 2);

    // non-numeric uncertainty counts as malformed; recovery on retry works
    calls = 0;
    fp.analysis.fn = [&](const agents::AnalysisRequest&) {
        ++calls;
        if (calls == 1) return agents::AnalysisResponse{{"x"}, std::nan("")};
        return agents::AnalysisResponse{{"x"}, 0.3};
    };
    PlannerMeta meta;
    CHECK(analyze("instr", obs(), {}, fp.analysis, &meta).u_plan == 0.3);
    CHECK(meta.retries == 1);
}

TEST_CASE("select_mode boundary and overrides") {
    PlannerConfig cfg; // delta = 0.4, adaptive
    CHECK(select_mode(0.4, cfg) == PlanningMode::Explicit); // boundary inclusive
    CHECK(select_mode(0.41, cfg) == PlanningMode::Implicit);

    cfg.delta = 1.0;
    for (double u : {0.0, 0.3, 0.9, 1.0}) {
        CHECK(select_mode(u, cfg) == PlanningMode::Explicit);
    }
    cfg.delta = 0.0;
    CHECK(select_mode(0.3, cfg) == PlanningMode::Implicit);
    CHECK(select_mode(0.0, cfg) == PlanningMode::Explicit);

    cfg.delta = 0.4;
    cfg.mode_override = ModeOverride::ForceExplicit;
    CHECK(select_mode(0.99, cfg) == PlanningMode::Explicit);
    cfg.mode_override = ModeOverride::ForceImplicit;
    CHECK(select_mode(0.0, cfg) == PlanningMode::Implicit);
}

TEST_CASE("select_mode is monotone in delta") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        PlannerConfig lo;
        PlannerConfig hi;
        lo.delta = unit(rng);
        hi.delta = lo.delta + (1.0 - lo.delta) * unit(rng);
        const double u = unit(rng);
        if (select_mode(u, lo) == PlanningMode::Explicit) {
            CHECK(select_mode(u, hi) == PlanningMode::Explicit);
        }
    }
}

TEST_CASE("next_subgoal commits the first explicit subgoal and logs the tail") {
    FnProviders fp;
    fp.planner.fn = [](const agents::PlanRequest& req) -> std::vector<std::string> {
        if (req.kind == agents::PlanKind::Explicit) {
            return {"open filters", "set rating 4+", "sort desc"};
        }
        return {"dismiss popup"};
    };
    const TaskAnalysis analysis{{"objective"}, 0.2};

    PlannerMeta meta;
    auto g = next_subgoal(analysis, obs(), PlanningMode::Explicit, fp.providers(), &meta);
    CHECK(g.description == "open filters");
    CHECK(g.origin_mode == PlanningMode::Explicit);
    CHECK(g.index_in_plan == 0);
    CHECK(meta.discarded_plan_tail == std::vector<std::string>{"set rating 4+", "sort desc"});

    g = next_subgoal(analysis, obs(), PlanningMode::Implicit, fp.providers());
    CHECK(g.description == "dismiss popup");
    CHECK(g.origin_mode == PlanningMode::Implicit);
    CHECK_FALSE(g.index_in_plan.has_value());
}

TEST_CASE("next_subgoal error paths") {
    FnProviders fp;
    fp.planner.fn = [](const agents::PlanRequest&) { return std::vector<std::string>{}; };
    const TaskAnalysis analysis{{"objective"}, 0.2};
    CHECK_THROWS_AS(next_subgoal(analysis, obs(), PlanningMode::Explicit, fp.providers()),
                    ProviderOutputInvalid);

    // empty objectives violate the precondition
    fp.planner.fn = [](const agents::PlanRequest&) { return std::vector<std::string>{"x"}; };
    CHECK_THROWS_AS(next_subgoal(TaskAnalysis{}, obs(), PlanningMode::Explicit, fp.providers()),
                    Error);
}

TEST_CASE("analyze requires an instruction") {
    FnProviders fp;
    fp.analysis.fn = [](const agents::AnalysisRequest&) {
        return agents::AnalysisResponse{{"x"}, 0.5};
    };
    CHECK_THROWS_AS(analyze("", obs(), {}, fp.analysis), Error);
}
