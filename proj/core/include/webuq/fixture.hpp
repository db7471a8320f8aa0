#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "webuq/types.hpp"

namespace webuq::webenv {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Task fixture: the environment half of a task file
// ---------------------------------------------------------------------------

struct Page {
    std::string id;
    std::vector<Element> elements;
};

/// Deterministic transition rule. `value` empty matches any action value;
/// a value-specific rule wins over the wildcard for the same key.
struct TransitionRule {
    std::string page;
    OperationKind op = OperationKind::Click;
    std::string element;
    std::string value;
    std::string to; // empty: stay on page
    // extra element-value effects, applied before navigation
    struct SetValue {
        std::string page;
        std::string element;
        std::string value;
    };
    std::vector<SetValue> set_values;
};

/// Scripted dynamic page changes keyed to the step counter.
struct MutationRule {
    enum class Kind { Popup, AddElement, RemoveElement };
    Kind kind = Kind::Popup;
    std::string page; // empty: any page (popup only)
    int after_step = 0;

    // popup
    std::vector<Element> popup_elements;
    std::string dismiss_element;
    bool blocking = true;

    // add/remove
    Element element;
    std::string element_id;
};

/// Success predicate tree, decidable from final state plus Stop answer.
struct SuccessPredicate {
    enum class Kind { All, Any, Stopped, AnswerEquals, AnswerContains, PageIs, ElementValue };
    Kind kind = Kind::Stopped;
    std::string value;
    std::string page;    // ElementValue
    std::string element; // ElementValue
    std::vector<SuccessPredicate> children;
};

struct TaskFixture {
    std::string id;
    std::string instruction;
    std::string initial_page;
    int max_steps = 30;
    std::vector<Page> pages;
    std::vector<TransitionRule> transitions;
    std::vector<MutationRule> mutations;
    SuccessPredicate success;

    const Page* find_page(const std::string& id) const;

    /// Throws FixtureInvalid with a location-bearing message.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Provider script: the scripted-backend half of a task file
// ---------------------------------------------------------------------------

/// Match conditions for script rules. Every field is optional; an empty
/// `when` matches anything, so a rule list usually ends with one.
/// Rules are tried in order, first match wins.
struct ScriptWhen {
    std::optional<std::string> page;
    std::optional<std::string> has_element;
    std::optional<std::string> not_has_element;
    std::optional<bool> status_error;
    std::optional<int> min_step;
    std::optional<int> max_step;
    std::optional<std::string> subgoal_contains; // reasoning + evaluation
    std::optional<int> excluded_min;             // reasoning only
    std::optional<bool> stopped;                 // evaluation only
    std::optional<std::string> answer_equals;    // evaluation only
    std::optional<std::string> answer_contains;  // evaluation only
    struct ElementValueCond {
        std::string element;
        std::string value;
    };
    std::optional<ElementValueCond> element_value; // observed element carries this value

    bool matches_observation(const Observation& obs) const;
};

struct AnalysisRule {
    ScriptWhen when;
    std::vector<std::string> objectives;
    double u_plan = 0.5;
};

struct ExplicitPlanRule {
    ScriptWhen when;
    std::vector<std::string> plan;
};

struct ImplicitPlanRule {
    ScriptWhen when;
    std::string next;
};

struct CandidateSpec {
    Action action;
    double confidence = 0.5;
};

struct ReasoningRule {
    ScriptWhen when;
    std::vector<CandidateSpec> candidates;
};

struct EvaluationRule {
    ScriptWhen when;
    double score = 3.0;
    bool subgoal_complete = false;
    bool task_complete = false;
    std::string rationale;
};

struct ProviderScript {
    std::vector<AnalysisRule> analysis;
    std::vector<ExplicitPlanRule> explicit_plans;
    std::vector<ImplicitPlanRule> implicit_plans;
    std::vector<ReasoningRule> reasoning;
    std::vector<EvaluationRule> evaluation;

    /// Sections lacking a catch-all rule; validate-fixtures reports them.
    std::vector<std::string> missing_catch_alls() const;
};

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

struct FixtureBundle {
    TaskFixture task;
    ProviderScript script;
    std::string source_path;
};

FixtureBundle parse_fixture(const json& j, const std::string& source_path);
FixtureBundle load_fixture_file(const std::string& path);

/// Loads every *.json file in a directory, sorted by task id.
/// Duplicate task ids across files are a fixture error.
std::vector<FixtureBundle> load_fixture_dir(const std::string& dir);

json fixture_to_json(const FixtureBundle& bundle);

} // namespace webuq::webenv
