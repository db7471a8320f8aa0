#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "webuq/fixture.hpp"
#include "webuq/types.hpp"

namespace webuq::webenv {

/// Deep copy of everything mutable in an environment. Restoring a
/// snapshot yields a state behaviorally indistinguishable from the
/// original at snapshot time; the fixture itself is shared and const.
struct EnvSnapshot {
    std::shared_ptr<const TaskFixture> fixture;
    std::string current_page;
    std::vector<std::string> page_history;
    std::map<std::pair<std::string, std::string>, std::string> value_overrides;
    std::set<std::size_t> dismissed_popups;
    bool finished = false;
    std::string stop_answer;
    int step_counter = 0;
};

/// Deterministic simulated web environment over a validated fixture.
/// One handle is single-owner; clones restored from snapshots are
/// independent and may be driven concurrently.
class WebEnvironment {
public:
    /// Validates the fixture and resets to the initial page.
    explicit WebEnvironment(TaskFixture fixture);
    explicit WebEnvironment(std::shared_ptr<const TaskFixture> fixture);

    /// Applies one action. Never crashes on hallucinated input: acting on
    /// a nonexistent or non-interactable element yields an observation
    /// with status ExecutionError and no state change. The step counter
    /// advances on every call, error or not.
    /// Throws EpisodeFinished if Stop was already applied.
    Observation apply(const Action& action);

    Observation observe() const;

    EnvSnapshot snapshot() const;
    static WebEnvironment restore(const EnvSnapshot& snap);

    /// Evaluates the fixture's success predicate over the final state.
    /// Only meaningful once the episode finished; an unfinished episode
    /// (max-steps exhaustion) judges false.
    bool judge() const;

    bool finished() const { return state_.finished; }
    const std::string& stop_answer() const { return state_.stop_answer; }
    int step_counter() const { return state_.step_counter; }
    const std::string& current_page() const { return state_.current_page; }
    const TaskFixture& fixture() const { return *fixture_; }

private:
    WebEnvironment(std::shared_ptr<const TaskFixture> fixture, EnvSnapshot state);

    struct PopupStatus {
        bool active = false;
        std::size_t rule_index = 0;
        bool blocking = false;
    };
    PopupStatus active_popup() const;
    std::vector<Element> visible_elements(const std::string& page_id) const;
    std::string visible_element_value(const std::string& page_id, const std::string& element_id) const;
    Observation error_observation(const std::string& message) const;
    const TransitionRule* match_transition(const Action& action) const;
    bool evaluate_predicate(const SuccessPredicate& pred) const;

    std::shared_ptr<const TaskFixture> fixture_;
    EnvSnapshot state_; // fixture pointer inside mirrors fixture_
};

} // namespace webuq::webenv
