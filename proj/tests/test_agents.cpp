#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "httplib.h"
#include "support.hpp"
#include "webuq/errors.hpp"
#include "webuq/llm_backend.hpp"
#include "webuq/scripted_backend.hpp"
#include "webuq/util.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <thread>

using namespace webuq;
using namespace webuq::agents;
using testsupport::click;

namespace {

webenv::ProviderScript demo_script() {
    webenv::ProviderScript s;

    webenv::AnalysisRule a0;
    a0.when.page = "home";
    a0.objectives = {"sort by rating", "report the answer"};
    a0.u_plan = 0.7;
    webenv::AnalysisRule a1;
    a1.objectives = {"recover"};
    a1.u_plan = 0.5;
    s.analysis = {a0, a1};

    webenv::ExplicitPlanRule e0;
    e0.plan = {"open filters", "set rating 4+", "sort desc"};
    s.explicit_plans = {e0};

    webenv::ImplicitPlanRule i0;
    i0.next = "dismiss popup";
    s.implicit_plans = {i0};

    webenv::ReasoningRule r0;
    r0.when.page = "home";
    r0.candidates = {{click("b0"), 0.8}, {click("b1"), 0.6}, {click("b2"), 0.4}};
    s.reasoning = {r0};

    webenv::EvaluationRule v0;
    v0.when.status_error = true;
    v0.score = 2.0;
    v0.rationale = "error banner";
    webenv::EvaluationRule v1;
    v1.when.element_value = webenv::ScriptWhen::ElementValueCond{"b0", "done"};
    v1.score = 9.0;
    v1.subgoal_complete = true;
    webenv::EvaluationRule v2;
    v2.score = 3.0;
    s.evaluation = {v0, v1, v2};
    return s;
}

Observation home_obs() {
    Observation obs;
    obs.page_id = "home";
    obs.elements = {{"b0", "button", "Zero", "", true},
                    {"b1", "button", "One", "", true},
                    {"b2", "button", "Two", "", true}};
    return obs;
}

} // namespace

TEST_CASE("providers bundle validation") {
    AgentProviders p;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    ScriptedBackend b("t", demo_script(), {});
    p = b.providers();
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("scripted analysis and plans are fixture passthrough") {
    ScriptedBackend b("demo", demo_script(), {});

    AnalysisRequest areq{"instruction", home_obs(), {}};
    const auto a = b.analyze_task(areq);
    CHECK(a.remaining_objectives.size() == 2);
    CHECK(a.u_plan == 0.7);

    PlanRequest preq{{"sort by rating"}, home_obs(), PlanKind::Explicit};
    CHECK(b.generate_plan(preq) ==
          std::vector<std::string>{"open filters", "set rating 4+", "sort desc"});
    preq.kind = PlanKind::Implicit;
    CHECK(b.generate_plan(preq) == std::vector<std::string>{"dismiss popup"});
}

TEST_CASE("scripted reasoning: fixed order, exclusions, k cap") {
    ScriptedBackend b("demo", demo_script(), {});
    ReasoningRequest req{"sort", home_obs(), {}, 3};

    auto resp = b.propose_actions(req);
    REQUIRE(resp.candidates.size() == 3);
    CHECK(resp.candidates[0].action == click("b0"));
    CHECK(resp.candidates[1].action == click("b1"));
    CHECK(resp.candidates[2].action == click("b2"));
    for (const auto& c : resp.candidates) CHECK_FALSE(c.unresolved);

    req.excluded = {click("b1")};
    resp = b.propose_actions(req);
    REQUIRE(resp.candidates.size() == 2);
    CHECK(resp.candidates[0].action == click("b0"));
    CHECK(resp.candidates[1].action == click("b2"));

    req.excluded.clear();
    req.k = 2;
    resp = b.propose_actions(req);
    CHECK(resp.candidates.size() == 2);

    req.excluded = {click("b0"), click("b1"), click("b2")};
    req.k = 3;
    CHECK_THROWS_AS(b.propose_actions(req), EmptyAfterFiltering);
}

TEST_CASE("scripted evaluation matches rules in order") {
    ScriptedBackend b("demo", demo_script(), {});

    auto obs = home_obs();
    EvaluationRequest req{"sort", obs, "instr", false, ""};
    CHECK(b.evaluate_state(req).s_base == 3.0); // catch-all

    req.observation.elements[0].value = "done";
    const auto done = b.evaluate_state(req);
    CHECK(done.s_base == 9.0);
    CHECK(done.subgoal_complete);

    req.observation.status = ObservationStatus::ExecutionError;
    const auto err = b.evaluate_state(req);
    CHECK(err.s_base == 2.0);
    CHECK(err.rationale == "error banner");
}

TEST_CASE("scripted backend is deterministic byte-for-byte") {
    ScriptedBackendConfig cfg;
    cfg.seed = 1234;
    cfg.injection = HallucinationInjection{0.5, 0.1, 0.3};

    auto run_sequence = [&]() {
        ScriptedBackend b("demo", demo_script(), cfg);
        json out = json::array();
        for (int k = 1; k <= 3; ++k) {
            ReasoningRequest req{"sort", home_obs(), {}, k};
            json j;
            to_json(j, b.propose_actions(req));
            out.push_back(j);
        }
        return out.dump();
    };
    CHECK(run_sequence() == run_sequence());
}

TEST_CASE("hallucination injection at rate 1 makes every candidate unresolved") {
    ScriptedBackendConfig cfg;
    cfg.seed = 7;
    cfg.injection = HallucinationInjection{1.0, 0.1, 0.35};
    ScriptedBackend b("demo", demo_script(), cfg);

    for (int trial = 0; trial < 25; ++trial) {
        ReasoningRequest req{"sort trial " + std::to_string(trial), home_obs(), {}, 3};
        const auto resp = b.propose_actions(req);
        REQUIRE(!resp.candidates.empty());
        for (const auto& c : resp.candidates) {
            CHECK(c.unresolved);
            CHECK_FALSE(req.observation.has_element(c.action.element));
            CHECK(c.confidence >= 0.1);
            CHECK(c.confidence <= 0.35);
        }
    }
}

TEST_CASE("scripted source binds per task") {
    const auto dir = std::string(WEBUQ_REPO_DIR) + "/fixtures";
    const auto bundles = webenv::load_fixture_dir(dir);
    ScriptedProviderSource source(bundles, {});
    CHECK_NOTHROW(source.bind(bundles.front().task.id).validate());
    CHECK_THROWS_AS(source.bind("no_such_task"), ConfigError);
}

TEST_CASE("clamping helpers warn") {
    std::vector<std::string> warnings;
    CHECK(clamp_confidence(1.4, &warnings) == 1.0);
    CHECK(clamp_score(11.0, &warnings) == 10.0);
    CHECK(clamp_score(-2.0, &warnings) == 0.0);
    CHECK(warnings.size() == 3);
}

// ---------------------------------------------------------------------------
// Live backend against a local stub server
// ---------------------------------------------------------------------------

namespace {

struct StubServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> hits{0};

    explicit StubServer(std::function<std::string(int hit, const json& body)> reply) {
        server.Post("/v1/chat/completions", [this, reply](const httplib::Request& req,
                                                          httplib::Response& res) {
            const int hit = hits.fetch_add(1);
            const json body = json::parse(req.body);
            const json envelope = {
                {"choices",
                 json::array({json{{"message", json{{"role", "assistant"},
                                                    {"content", reply(hit, body)}}}}})}};
            res.set_content(envelope.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~StubServer() {
        server.stop();
        thread.join();
    }

    LlmBackendConfig config() const {
        LlmBackendConfig cfg;
        cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";
        cfg.model = "stub-model";
        cfg.timeout_ms = 2000;
        cfg.max_retries = 1;
        cfg.prompt_dir = std::string(WEBUQ_REPO_DIR) + "/prompts";
        return cfg;
    }
};

} // namespace

TEST_CASE("live backend parses analysis payloads") {
    StubServer stub([](int, const json&) {
        return std::string{"Here is my analysis:\n"
                           "{\"remaining\": [\"sort\", \"answer\"], \"uncertainty\": 0.35}"};
    });
    LiveBackend backend(stub.config());
    const auto resp = backend.analyze_task({"instr", home_obs(), {}});
    CHECK(resp.remaining_objectives == std::vector<std::string>{"sort", "answer"});
    CHECK(resp.u_plan == 0.35);
}

TEST_CASE("live backend repairs truncated JSON with one retry") {
    StubServer stub([](int hit, const json&) {
        if (hit == 0) return std::string{"{\"remaining\": [\"sort\""}; // truncated
        return std::string{"{\"remaining\": [\"sort\"], \"uncertainty\": 0.2}"};
    });
    LiveBackend backend(stub.config());
    const auto resp = backend.analyze_task({"instr", home_obs(), {}});
    CHECK(resp.u_plan == 0.2);
    CHECK(stub.hits.load() == 2);
}

TEST_CASE("live backend raises MalformedOutput after the repair round") {
    StubServer stub([](int, const json&) { return std::string{"no list markers here"}; });
    LiveBackend backend(stub.config());
    PlanRequest req{{"sort"}, home_obs(), PlanKind::Explicit};
    CHECK_THROWS_AS(backend.generate_plan(req), MalformedOutput);
    CHECK(stub.hits.load() == 2);
}

TEST_CASE("live backend clamps out-of-range scores with a warning") {
    StubServer stub([](int, const json&) {
        return std::string{"{\"score\": 11, \"subgoal_complete\": true}"};
    });
    LiveBackend backend(stub.config());
    const auto resp = backend.evaluate_state({"sub", home_obs(), "instr", false, ""});
    CHECK(resp.s_base == 10.0);
    CHECK(resp.subgoal_complete);
    const auto warnings = backend.drain_warnings();
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("clamped") != std::string::npos);
}

TEST_CASE("live backend filters exclusions and flags unresolved elements") {
    StubServer stub([](int, const json&) {
        return std::string{
            "{\"candidates\": ["
            "{\"operation\": \"click\", \"element\": \"b0\", \"confidence\": 0.9},"
            "{\"operation\": \"click\", \"element\": \"ghost\", \"confidence\": 1.7},"
            "{\"operation\": \"click\", \"element\": \"b1\", \"confidence\": 0.4}]}"};
    });
    LiveBackend backend(stub.config());
    ReasoningRequest req{"sort", home_obs(), {click("b0")}, 3};
    const auto resp = backend.propose_actions(req);
    REQUIRE(resp.candidates.size() == 2);
    CHECK(resp.candidates[0].action == click("ghost"));
    CHECK(resp.candidates[0].unresolved);
    CHECK(resp.candidates[0].confidence == 1.0); // clamped
    CHECK(resp.candidates[1].action == click("b1"));
    CHECK_FALSE(resp.candidates[1].unresolved);
}

TEST_CASE("live backend sends the bearer token and model") {
    static json captured;
    StubServer stub([](int, const json& body) {
        captured = body;
        return std::string{"{\"remaining\": [\"x\"], \"uncertainty\": 0.1}"};
    });
    auto cfg = stub.config();
    cfg.auth_token_env = "WEBUQ_TEST_TOKEN";
    ::setenv("WEBUQ_TEST_TOKEN", "sesame", 1);
    LiveBackend backend(cfg);
    backend.analyze_task({"instr", home_obs(), {}});
    CHECK(captured["model"] == "stub-model");
    CHECK(captured["temperature"] == 0.3);
    ::unsetenv("WEBUQ_TEST_TOKEN");
}

TEST_CASE("transport failure surfaces as BackendUnavailable within the budget") {
    LlmBackendConfig cfg;
    cfg.endpoint = "http://127.0.0.1:9"; // nothing listens on the discard port
    cfg.timeout_ms = 300;
    cfg.max_retries = 1;
    cfg.prompt_dir = std::string(WEBUQ_REPO_DIR) + "/prompts";
    LiveBackend backend(cfg);

    const auto t0 = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(backend.analyze_task({"instr", home_obs(), {}}), BackendUnavailable);
    const auto elapsed = std::chrono::steady_clock::now() - t0;
    // timeout * (1 + max_retries) plus slack
    CHECK(std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count() < 3000);
}
