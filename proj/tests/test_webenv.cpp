#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"
#include "webuq/errors.hpp"
#include "webuq/webenv.hpp"

#include <random>

using namespace webuq;
using namespace webuq::webenv;
using testsupport::click;
using testsupport::stop;

namespace {

TaskFixture two_page_fixture() {
    TaskFixture f;
    f.id = "two_page";
    f.instruction = "navigate and answer";
    f.initial_page = "a";
    f.max_steps = 20;

    Page a;
    a.id = "a";
    a.elements = {
        {"lnk_b", "link", "Go to B", "", true},
        {"search", "textbox", "Search", "", true},
        {"txt", "statictext", "hello", "", false},
    };
    Page b;
    b.id = "b";
    b.elements = {{"lnk_a", "link", "Back to A", "", true}};
    f.pages = {a, b};

    f.transitions.push_back({"a", OperationKind::Click, "lnk_b", "", "b", {}});
    f.transitions.push_back({"b", OperationKind::Click, "lnk_a", "", "a", {}});

    f.success.kind = SuccessPredicate::Kind::All;
    SuccessPredicate stopped;
    stopped.kind = SuccessPredicate::Kind::Stopped;
    SuccessPredicate ans;
    ans.kind = SuccessPredicate::Kind::AnswerEquals;
    ans.value = "42";
    f.success.children = {stopped, ans};
    return f;
}

} // namespace

TEST_CASE("reset yields the initial page") {
    WebEnvironment env(two_page_fixture());
    const auto obs = env.observe();
    CHECK(obs.page_id == "a");
    CHECK(obs.elements.size() == 3);
    CHECK(obs.step_counter == 0);
    CHECK(obs.status == ObservationStatus::Ok);
}

TEST_CASE("fixture validation catches duplicate transition keys") {
    auto f = two_page_fixture();
    f.transitions.push_back({"a", OperationKind::Click, "lnk_b", "", "b", {}});
    CHECK_THROWS_AS(WebEnvironment{f}, FixtureInvalid);
    CHECK_THROWS_WITH_AS(WebEnvironment{f}, doctest::Contains("duplicate transition key"),
                         FixtureInvalid);
}

TEST_CASE("fixture validation reports locations") {
    auto f = two_page_fixture();
    f.initial_page = "nope";
    CHECK_THROWS_WITH_AS(WebEnvironment{f}, doctest::Contains("initial page"), FixtureInvalid);

    f = two_page_fixture();
    f.pages[0].elements.push_back({"txt2", "statictext", "x", "", true});
    CHECK_THROWS_WITH_AS(WebEnvironment{f}, doctest::Contains("interactable"), FixtureInvalid);
}

TEST_CASE("apply follows transition rules") {
    WebEnvironment env(two_page_fixture());
    auto obs = env.apply(click("lnk_b"));
    CHECK(obs.page_id == "b");
    CHECK(obs.status == ObservationStatus::Ok);
    CHECK(obs.step_counter == 1);
}

TEST_CASE("hallucinated actions give ExecutionError without state change") {
    WebEnvironment env(two_page_fixture());
    const auto before = env.observe();
    auto obs = env.apply(click("phantom_button"));
    CHECK(obs.status == ObservationStatus::ExecutionError);
    CHECK(obs.page_id == "a");
    CHECK(obs.step_counter == 1); // counter advances even on errors
    // state unchanged apart from the counter
    auto after = env.observe();
    CHECK(after.page_id == before.page_id);
    CHECK(after.elements == before.elements);

    // non-interactable target
    obs = env.apply(click("txt"));
    CHECK(obs.status == ObservationStatus::ExecutionError);
    CHECK(obs.step_counter == 2);
}

TEST_CASE("type updates the element value in place") {
    WebEnvironment env(two_page_fixture());
    const auto obs = env.apply(Action{OperationKind::Type, "search", "mouse"});
    CHECK(obs.status == ObservationStatus::Ok);
    CHECK(obs.page_id == "a");
    CHECK(obs.find_element("search")->value == "mouse");
}

TEST_CASE("every syntactically odd action still yields an observation") {
    WebEnvironment env(two_page_fixture());
    CHECK(env.apply(Action{OperationKind::Type, "search", ""}).status ==
          ObservationStatus::ExecutionError);
    CHECK(env.apply(Action{OperationKind::Click, "", ""}).status ==
          ObservationStatus::ExecutionError);
    CHECK(env.apply(Action{OperationKind::Goto, "", "nope"}).status ==
          ObservationStatus::ExecutionError);
    CHECK(env.step_counter() == 3);
}

TEST_CASE("goto, go_back and scroll") {
    WebEnvironment env(two_page_fixture());
    auto obs = env.apply(Action{OperationKind::Goto, "", "b"});
    CHECK(obs.page_id == "b");
    obs = env.apply(Action{OperationKind::GoBack, "", ""});
    CHECK(obs.page_id == "a");
    obs = env.apply(Action{OperationKind::Scroll, "", ""});
    CHECK(obs.page_id == "a");
    CHECK(obs.status == ObservationStatus::Ok);
}

TEST_CASE("stop finishes the episode; further actions throw") {
    WebEnvironment env(two_page_fixture());
    env.apply(stop("42"));
    CHECK(env.finished());
    CHECK(env.stop_answer() == "42");
    CHECK_THROWS_AS(env.apply(click("lnk_b")), EpisodeFinished);
}

TEST_CASE("judge evaluates the success predicate") {
    // right answer
    WebEnvironment env(two_page_fixture());
    env.apply(stop("42"));
    CHECK(env.judge());

    // wrong answer
    WebEnvironment env2(two_page_fixture());
    env2.apply(stop("41"));
    CHECK_FALSE(env2.judge());

    // no stop at all (step-limit exhaustion)
    WebEnvironment env3(two_page_fixture());
    env3.apply(click("lnk_b"));
    CHECK_FALSE(env3.judge());
}

TEST_CASE("snapshot/restore round trip") {
    WebEnvironment env(two_page_fixture());
    const auto snap = env.snapshot();
    const auto before = env.observe();

    env.apply(click("lnk_b"));
    CHECK(env.observe().page_id == "b");

    auto restored = WebEnvironment::restore(snap);
    CHECK(restored.observe() == before);
}

TEST_CASE("two restores diverge independently") {
    WebEnvironment env(two_page_fixture());
    env.apply(Action{OperationKind::Type, "search", "alpha"});
    const auto snap = env.snapshot();

    auto c1 = WebEnvironment::restore(snap);
    auto c2 = WebEnvironment::restore(snap);
    c1.apply(click("lnk_b"));
    c2.apply(Action{OperationKind::Type, "search", "beta"});

    CHECK(c1.observe().page_id == "b");
    CHECK(c2.observe().page_id == "a");
    CHECK(c2.observe().find_element("search")->value == "beta");
    // the original snapshot is untouched
    auto c3 = WebEnvironment::restore(snap);
    CHECK(c3.observe().find_element("search")->value == "alpha");
}

TEST_CASE("50-step random replay equality on a restored snapshot") {
    auto fixture = testsupport::arena_fixture(6, 200);
    // add a second page plus transitions so the walk moves around
    Page other;
    other.id = "annex";
    other.elements = {{"lnk_hub", "link", "hub", "", true}};
    fixture.pages.push_back(other);
    fixture.transitions.push_back({"hub", OperationKind::Click, "b0", "", "annex", {}});
    fixture.transitions.push_back({"annex", OperationKind::Click, "lnk_hub", "", "hub", {}});

    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<int> pick(0, 7);

    auto random_action = [&]() -> Action {
        const int r = pick(rng);
        if (r < 5) return click("b" + std::to_string(r));
        if (r == 5) return click("lnk_hub");
        if (r == 6) return Action{OperationKind::Scroll, "", ""};
        return click("phantom_" + std::to_string(pick(rng)));
    };

    WebEnvironment env(fixture);
    env.apply(click("b1"));
    const auto snap = env.snapshot();

    std::vector<Action> actions;
    for (int i = 0; i < 50; ++i) actions.push_back(random_action());

    auto run = [&](WebEnvironment e) {
        std::vector<Observation> seq;
        for (const auto& a : actions) seq.push_back(e.apply(a));
        return seq;
    };

    const auto first = run(WebEnvironment::restore(snap));
    const auto second = run(WebEnvironment::restore(snap));
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i] == second[i]);
    }
}

TEST_CASE("popup timer, dismissal and blocking") {
    auto f = two_page_fixture();
    MutationRule popup;
    popup.kind = MutationRule::Kind::Popup;
    popup.page = "a";
    popup.after_step = 2;
    popup.blocking = true;
    popup.popup_elements = {{"popup_text", "statictext", "subscribe!", "", false},
                            {"popup_close", "button", "Close", "", true}};
    popup.dismiss_element = "popup_close";
    f.mutations.push_back(popup);

    WebEnvironment env(f);
    CHECK_FALSE(env.observe().has_element("popup_close")); // timer not elapsed

    env.apply(Action{OperationKind::Scroll, "", ""});
    env.apply(Action{OperationKind::Scroll, "", ""});
    CHECK(env.observe().has_element("popup_close"));

    // blocked while active
    auto obs = env.apply(Action{OperationKind::Type, "search", "x"});
    CHECK(obs.status == ObservationStatus::ExecutionError);

    obs = env.apply(click("popup_close"));
    CHECK(obs.status == ObservationStatus::Ok);
    CHECK_FALSE(obs.has_element("popup_close"));

    obs = env.apply(Action{OperationKind::Type, "search", "x"});
    CHECK(obs.status == ObservationStatus::Ok);
}

TEST_CASE("element add/remove mutations follow the step counter") {
    auto f = two_page_fixture();
    MutationRule rem;
    rem.kind = MutationRule::Kind::RemoveElement;
    rem.page = "a";
    rem.element_id = "search";
    rem.after_step = 1;
    f.mutations.push_back(rem);
    MutationRule add;
    add.kind = MutationRule::Kind::AddElement;
    add.page = "a";
    add.after_step = 2;
    add.element = {"late_btn", "button", "Late", "", true};
    f.mutations.push_back(add);

    WebEnvironment env(f);
    CHECK(env.observe().has_element("search"));
    CHECK_FALSE(env.observe().has_element("late_btn"));
    env.apply(Action{OperationKind::Scroll, "", ""});
    CHECK_FALSE(env.observe().has_element("search"));
    env.apply(Action{OperationKind::Scroll, "", ""});
    CHECK(env.observe().has_element("late_btn"));
}

TEST_CASE("fixture corpus loads and round-trips through json") {
    const auto dir = std::string(WEBUQ_REPO_DIR) + "/fixtures";
    const auto bundles = load_fixture_dir(dir);
    CHECK(bundles.size() >= 20);
    for (const auto& b : bundles) {
        CHECK_NOTHROW(b.task.validate());
        CHECK(b.script.missing_catch_alls().empty());

        const auto j = fixture_to_json(b);
        const auto reparsed = parse_fixture(j, b.source_path);
        CHECK(fixture_to_json(reparsed) == j);
    }
}
