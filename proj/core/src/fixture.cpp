#include "webuq/fixture.hpp"

#include "webuq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace webuq::webenv {

namespace {

const std::set<std::string>& interactable_roles() {
    static const std::set<std::string> roles = {
        "link", "button", "textbox", "searchbox", "combobox",
        "checkbox", "radio", "option", "tab", "menuitem", "switch",
    };
    return roles;
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw FixtureInvalid(where + ": " + what);
}

std::string transition_key(const TransitionRule& t) {
    std::ostringstream out;
    out << t.page << '|' << to_string(t.op) << '|' << t.element << '|' << t.value;
    return out.str();
}

} // namespace

const Page* TaskFixture::find_page(const std::string& page_id) const {
    for (const auto& p : pages) {
        if (p.id == page_id) return &p;
    }
    return nullptr;
}

void TaskFixture::validate() const {
    const std::string where = "fixture '" + id + "'";
    if (id.empty()) fail("fixture", "task id is empty");
    if (instruction.empty()) fail(where, "instruction is empty");
    if (max_steps < 1) fail(where, "max_steps must be >= 1");
    if (pages.empty()) fail(where, "no pages");

    std::set<std::string> page_ids;
    for (const auto& page : pages) {
        if (page.id.empty()) fail(where, "page with empty id");
        if (!page_ids.insert(page.id).second) fail(where, "duplicate page id '" + page.id + "'");
        std::set<std::string> element_ids;
        for (const auto& el : page.elements) {
            const std::string at = where + ", page '" + page.id + "'";
            if (el.id.empty()) fail(at, "element with empty id");
            if (!element_ids.insert(el.id).second) fail(at, "duplicate element id '" + el.id + "'");
            if (el.interactable && !interactable_roles().count(el.role)) {
                fail(at, "element '" + el.id + "' marked interactable but role '" + el.role +
                             "' is not in the interactable set");
            }
        }
    }
    if (!page_ids.count(initial_page)) {
        fail(where, "initial page '" + initial_page + "' does not exist");
    }

    std::set<std::string> transition_keys;
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        const auto& t = transitions[i];
        const std::string at = where + ", transition #" + std::to_string(i);
        if (!page_ids.count(t.page)) fail(at, "unknown page '" + t.page + "'");
        if (!t.to.empty() && !page_ids.count(t.to)) fail(at, "unknown target page '" + t.to + "'");
        if (t.op == OperationKind::Click || t.op == OperationKind::Type ||
            t.op == OperationKind::Select) {
            if (t.element.empty()) fail(at, "element required for " + std::string(to_string(t.op)));
        }
        if (t.op == OperationKind::Stop || t.op == OperationKind::GoBack ||
            t.op == OperationKind::Goto) {
            fail(at, std::string(to_string(t.op)) + " has fixed semantics and takes no rules");
        }
        if (!transition_keys.insert(transition_key(t)).second) {
            fail(at, "duplicate transition key (page=" + t.page + ", op=" + to_string(t.op) +
                         ", element=" + t.element + ", value=" + (t.value.empty() ? "*" : t.value) + ")");
        }
        for (const auto& sv : t.set_values) {
            if (!page_ids.count(sv.page)) fail(at, "set_values unknown page '" + sv.page + "'");
        }
    }

    for (std::size_t i = 0; i < mutations.size(); ++i) {
        const auto& m = mutations[i];
        const std::string at = where + ", mutation #" + std::to_string(i);
        if (!m.page.empty() && !page_ids.count(m.page)) fail(at, "unknown page '" + m.page + "'");
        if (m.after_step < 0) fail(at, "after_step must be >= 0");
        switch (m.kind) {
            case MutationRule::Kind::Popup: {
                if (m.popup_elements.empty()) fail(at, "popup without elements");
                if (m.dismiss_element.empty()) fail(at, "popup without dismiss_element");
                bool found = false;
                for (const auto& el : m.popup_elements) found |= el.id == m.dismiss_element;
                if (!found) fail(at, "dismiss_element not among popup elements");
                break;
            }
            case MutationRule::Kind::AddElement:
                if (m.page.empty()) fail(at, "add_element requires a page");
                if (m.element.id.empty()) fail(at, "add_element without element id");
                break;
            case MutationRule::Kind::RemoveElement:
                if (m.page.empty()) fail(at, "remove_element requires a page");
                if (m.element_id.empty()) fail(at, "remove_element without element id");
                break;
        }
    }

    // success predicate references must resolve
    std::vector<const SuccessPredicate*> stack{&success};
    while (!stack.empty()) {
        const auto* p = stack.back();
        stack.pop_back();
        const std::string at = where + ", success predicate";
        switch (p->kind) {
            case SuccessPredicate::Kind::All:
            case SuccessPredicate::Kind::Any:
                if (p->children.empty()) fail(at, "empty all/any");
                for (const auto& c : p->children) stack.push_back(&c);
                break;
            case SuccessPredicate::Kind::PageIs:
                if (!page_ids.count(p->value)) fail(at, "unknown page '" + p->value + "'");
                break;
            case SuccessPredicate::Kind::ElementValue: {
                const Page* page = find_page(p->page);
                if (!page) fail(at, "unknown page '" + p->page + "'");
                break;
            }
            default:
                break;
        }
    }
}

bool ScriptWhen::matches_observation(const Observation& obs) const {
    if (page && obs.page_id != *page) return false;
    if (has_element && !obs.has_element(*has_element)) return false;
    if (not_has_element && obs.has_element(*not_has_element)) return false;
    if (status_error &&
        (obs.status == ObservationStatus::ExecutionError) != *status_error) {
        return false;
    }
    if (min_step && obs.step_counter < *min_step) return false;
    if (max_step && obs.step_counter > *max_step) return false;
    if (element_value) {
        const Element* el = obs.find_element(element_value->element);
        if (!el || el->value != element_value->value) return false;
    }
    return true;
}

namespace {

bool is_catch_all(const ScriptWhen& w) {
    return !w.page && !w.has_element && !w.not_has_element && !w.status_error && !w.min_step &&
           !w.max_step && !w.subgoal_contains && !w.excluded_min && !w.stopped &&
           !w.answer_equals && !w.answer_contains && !w.element_value;
}

} // namespace

std::vector<std::string> ProviderScript::missing_catch_alls() const {
    std::vector<std::string> missing;
    auto check = [&](const char* name, auto const& rules) {
        for (const auto& r : rules) {
            if (is_catch_all(r.when)) return;
        }
        missing.emplace_back(name);
    };
    check("analysis", analysis);
    check("explicit_plans", explicit_plans);
    check("implicit_plans", implicit_plans);
    check("reasoning", reasoning);
    check("evaluation", evaluation);
    return missing;
}

// ---------------------------------------------------------------------------
// JSON parsing
// ---------------------------------------------------------------------------

namespace {

ScriptWhen parse_when(const json& j, const std::string& where) {
    ScriptWhen w;
    if (!j.is_object()) fail(where, "'when' must be an object");
    for (const auto& [key, val] : j.items()) {
        if (key == "page") w.page = val.get<std::string>();
        else if (key == "has_element") w.has_element = val.get<std::string>();
        else if (key == "not_has_element") w.not_has_element = val.get<std::string>();
        else if (key == "status_error") w.status_error = val.get<bool>();
        else if (key == "min_step") w.min_step = val.get<int>();
        else if (key == "max_step") w.max_step = val.get<int>();
        else if (key == "subgoal_contains") w.subgoal_contains = val.get<std::string>();
        else if (key == "excluded_min") w.excluded_min = val.get<int>();
        else if (key == "stopped") w.stopped = val.get<bool>();
        else if (key == "answer_equals") w.answer_equals = val.get<std::string>();
        else if (key == "answer_contains") w.answer_contains = val.get<std::string>();
        else if (key == "element_value") {
            ScriptWhen::ElementValueCond cond;
            cond.element = val.at("element").get<std::string>();
            cond.value = val.at("value").get<std::string>();
            w.element_value = cond;
        } else {
            fail(where, "unknown 'when' key '" + key + "'");
        }
    }
    return w;
}

json when_to_json(const ScriptWhen& w) {
    json j = json::object();
    if (w.page) j["page"] = *w.page;
    if (w.has_element) j["has_element"] = *w.has_element;
    if (w.not_has_element) j["not_has_element"] = *w.not_has_element;
    if (w.status_error) j["status_error"] = *w.status_error;
    if (w.min_step) j["min_step"] = *w.min_step;
    if (w.max_step) j["max_step"] = *w.max_step;
    if (w.subgoal_contains) j["subgoal_contains"] = *w.subgoal_contains;
    if (w.excluded_min) j["excluded_min"] = *w.excluded_min;
    if (w.stopped) j["stopped"] = *w.stopped;
    if (w.answer_equals) j["answer_equals"] = *w.answer_equals;
    if (w.answer_contains) j["answer_contains"] = *w.answer_contains;
    if (w.element_value) {
        j["element_value"] = {{"element", w.element_value->element},
                              {"value", w.element_value->value}};
    }
    return j;
}

SuccessPredicate parse_predicate(const json& j, const std::string& where) {
    SuccessPredicate p;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "all" || kind == "any") {
        p.kind = kind == "all" ? SuccessPredicate::Kind::All : SuccessPredicate::Kind::Any;
        for (const auto& c : j.at("of")) p.children.push_back(parse_predicate(c, where));
    } else if (kind == "stopped") {
        p.kind = SuccessPredicate::Kind::Stopped;
    } else if (kind == "answer_equals") {
        p.kind = SuccessPredicate::Kind::AnswerEquals;
        p.value = j.at("value").get<std::string>();
    } else if (kind == "answer_contains") {
        p.kind = SuccessPredicate::Kind::AnswerContains;
        p.value = j.at("value").get<std::string>();
    } else if (kind == "page_is") {
        p.kind = SuccessPredicate::Kind::PageIs;
        p.value = j.at("value").get<std::string>();
    } else if (kind == "element_value") {
        p.kind = SuccessPredicate::Kind::ElementValue;
        p.page = j.at("page").get<std::string>();
        p.element = j.at("element").get<std::string>();
        p.value = j.at("value").get<std::string>();
    } else {
        fail(where, "unknown success predicate kind '" + kind + "'");
    }
    return p;
}

json predicate_to_json(const SuccessPredicate& p) {
    json j = json::object();
    switch (p.kind) {
        case SuccessPredicate::Kind::All:
        case SuccessPredicate::Kind::Any: {
            j["kind"] = p.kind == SuccessPredicate::Kind::All ? "all" : "any";
            json of = json::array();
            for (const auto& c : p.children) of.push_back(predicate_to_json(c));
            j["of"] = of;
            break;
        }
        case SuccessPredicate::Kind::Stopped:
            j["kind"] = "stopped";
            break;
        case SuccessPredicate::Kind::AnswerEquals:
            j["kind"] = "answer_equals";
            j["value"] = p.value;
            break;
        case SuccessPredicate::Kind::AnswerContains:
            j["kind"] = "answer_contains";
            j["value"] = p.value;
            break;
        case SuccessPredicate::Kind::PageIs:
            j["kind"] = "page_is";
            j["value"] = p.value;
            break;
        case SuccessPredicate::Kind::ElementValue:
            j["kind"] = "element_value";
            j["page"] = p.page;
            j["element"] = p.element;
            j["value"] = p.value;
            break;
    }
    return j;
}

TaskFixture parse_task(const json& j, const std::string& where) {
    TaskFixture t;
    t.id = j.at("id").get<std::string>();
    t.instruction = j.at("instruction").get<std::string>();
    t.initial_page = j.at("initial_page").get<std::string>();
    t.max_steps = j.value("max_steps", 30);

    for (const auto& pj : j.at("pages")) {
        Page page;
        page.id = pj.at("id").get<std::string>();
        page.elements = pj.value("elements", std::vector<Element>{});
        t.pages.push_back(std::move(page));
    }

    for (const auto& tj : j.value("transitions", json::array())) {
        TransitionRule rule;
        rule.page = tj.at("page").get<std::string>();
        const auto& aj = tj.at("action");
        rule.op = operation_kind_from_string(aj.at("op").get<std::string>());
        rule.element = aj.value("element", std::string{});
        rule.value = aj.value("value", std::string{});
        rule.to = tj.value("to", std::string{});
        for (const auto& sj : tj.value("set_values", json::array())) {
            rule.set_values.push_back({sj.at("page").get<std::string>(),
                                       sj.at("element").get<std::string>(),
                                       sj.at("value").get<std::string>()});
        }
        t.transitions.push_back(std::move(rule));
    }

    for (const auto& mj : j.value("mutations", json::array())) {
        MutationRule m;
        const auto kind = mj.at("kind").get<std::string>();
        m.page = mj.value("page", std::string{});
        m.after_step = mj.value("after_step", 0);
        if (kind == "popup") {
            m.kind = MutationRule::Kind::Popup;
            m.popup_elements = mj.at("elements").get<std::vector<Element>>();
            m.dismiss_element = mj.at("dismiss_element").get<std::string>();
            m.blocking = mj.value("blocking", true);
        } else if (kind == "add_element") {
            m.kind = MutationRule::Kind::AddElement;
            m.element = mj.at("element").get<Element>();
        } else if (kind == "remove_element") {
            m.kind = MutationRule::Kind::RemoveElement;
            m.element_id = mj.at("element").get<std::string>();
        } else {
            fail(where, "unknown mutation kind '" + kind + "'");
        }
        t.mutations.push_back(std::move(m));
    }

    t.success = parse_predicate(j.at("success"), where + " success");
    return t;
}

json task_to_json(const TaskFixture& t) {
    json j;
    j["id"] = t.id;
    j["instruction"] = t.instruction;
    j["initial_page"] = t.initial_page;
    j["max_steps"] = t.max_steps;
    json pages = json::array();
    for (const auto& p : t.pages) {
        pages.push_back({{"id", p.id}, {"elements", p.elements}});
    }
    j["pages"] = pages;
    json transitions = json::array();
    for (const auto& tr : t.transitions) {
        json tj;
        tj["page"] = tr.page;
        json aj{{"op", to_string(tr.op)}};
        if (!tr.element.empty()) aj["element"] = tr.element;
        if (!tr.value.empty()) aj["value"] = tr.value;
        tj["action"] = aj;
        if (!tr.to.empty()) tj["to"] = tr.to;
        if (!tr.set_values.empty()) {
            json svs = json::array();
            for (const auto& sv : tr.set_values) {
                svs.push_back({{"page", sv.page}, {"element", sv.element}, {"value", sv.value}});
            }
            tj["set_values"] = svs;
        }
        transitions.push_back(tj);
    }
    j["transitions"] = transitions;
    if (!t.mutations.empty()) {
        json muts = json::array();
        for (const auto& m : t.mutations) {
            json mj;
            switch (m.kind) {
                case MutationRule::Kind::Popup:
                    mj["kind"] = "popup";
                    if (!m.page.empty()) mj["page"] = m.page;
                    mj["after_step"] = m.after_step;
                    mj["elements"] = m.popup_elements;
                    mj["dismiss_element"] = m.dismiss_element;
                    mj["blocking"] = m.blocking;
                    break;
                case MutationRule::Kind::AddElement:
                    mj["kind"] = "add_element";
                    mj["page"] = m.page;
                    mj["after_step"] = m.after_step;
                    mj["element"] = m.element;
                    break;
                case MutationRule::Kind::RemoveElement:
                    mj["kind"] = "remove_element";
                    mj["page"] = m.page;
                    mj["after_step"] = m.after_step;
                    mj["element"] = m.element_id;
                    break;
            }
            muts.push_back(mj);
        }
        j["mutations"] = muts;
    }
    j["success"] = predicate_to_json(t.success);
    return j;
}

ProviderScript parse_script(const json& j, const std::string& where) {
    ProviderScript s;
    for (const auto& rj : j.value("analysis", json::array())) {
        AnalysisRule r;
        r.when = parse_when(rj.value("when", json::object()), where + " analysis");
        r.objectives = rj.at("objectives").get<std::vector<std::string>>();
        r.u_plan = rj.at("u_plan").get<double>();
        if (!std::isfinite(r.u_plan)) fail(where, "analysis u_plan must be finite");
        s.analysis.push_back(std::move(r));
    }
    for (const auto& rj : j.value("explicit_plans", json::array())) {
        ExplicitPlanRule r;
        r.when = parse_when(rj.value("when", json::object()), where + " explicit_plans");
        r.plan = rj.at("plan").get<std::vector<std::string>>();
        s.explicit_plans.push_back(std::move(r));
    }
    for (const auto& rj : j.value("implicit_plans", json::array())) {
        ImplicitPlanRule r;
        r.when = parse_when(rj.value("when", json::object()), where + " implicit_plans");
        r.next = rj.at("next").get<std::string>();
        s.implicit_plans.push_back(std::move(r));
    }
    for (const auto& rj : j.value("reasoning", json::array())) {
        ReasoningRule r;
        r.when = parse_when(rj.value("when", json::object()), where + " reasoning");
        for (const auto& cj : rj.at("candidates")) {
            CandidateSpec c;
            c.action = cj.at("action").get<Action>();
            c.confidence = cj.at("confidence").get<double>();
            if (!(c.confidence >= 0.0 && c.confidence <= 1.0)) {
                fail(where, "reasoning confidence out of [0, 1]");
            }
            r.candidates.push_back(std::move(c));
        }
        if (r.candidates.empty()) fail(where, "reasoning rule without candidates");
        s.reasoning.push_back(std::move(r));
    }
    for (const auto& rj : j.value("evaluation", json::array())) {
        EvaluationRule r;
        r.when = parse_when(rj.value("when", json::object()), where + " evaluation");
        r.score = rj.at("score").get<double>();
        if (!std::isfinite(r.score)) fail(where, "evaluation score must be finite");
        r.subgoal_complete = rj.value("subgoal_complete", false);
        r.task_complete = rj.value("task_complete", false);
        r.rationale = rj.value("rationale", std::string{});
        s.evaluation.push_back(std::move(r));
    }
    return s;
}

json script_to_json(const ProviderScript& s) {
    json j;
    json analysis = json::array();
    for (const auto& r : s.analysis) {
        analysis.push_back(
            {{"when", when_to_json(r.when)}, {"objectives", r.objectives}, {"u_plan", r.u_plan}});
    }
    j["analysis"] = analysis;
    json explicit_plans = json::array();
    for (const auto& r : s.explicit_plans) {
        explicit_plans.push_back({{"when", when_to_json(r.when)}, {"plan", r.plan}});
    }
    j["explicit_plans"] = explicit_plans;
    json implicit_plans = json::array();
    for (const auto& r : s.implicit_plans) {
        implicit_plans.push_back({{"when", when_to_json(r.when)}, {"next", r.next}});
    }
    j["implicit_plans"] = implicit_plans;
    json reasoning = json::array();
    for (const auto& r : s.reasoning) {
        json cands = json::array();
        for (const auto& c : r.candidates) {
            cands.push_back({{"action", c.action}, {"confidence", c.confidence}});
        }
        reasoning.push_back({{"when", when_to_json(r.when)}, {"candidates", cands}});
    }
    j["reasoning"] = reasoning;
    json evaluation = json::array();
    for (const auto& r : s.evaluation) {
        json rj{{"when", when_to_json(r.when)}, {"score", r.score}};
        if (r.subgoal_complete) rj["subgoal_complete"] = true;
        if (r.task_complete) rj["task_complete"] = true;
        if (!r.rationale.empty()) rj["rationale"] = r.rationale;
        evaluation.push_back(rj);
    }
    j["evaluation"] = evaluation;
    return j;
}

} // namespace

FixtureBundle parse_fixture(const json& j, const std::string& source_path) {
    const std::string where = "fixture file " + source_path;
    FixtureBundle bundle;
    bundle.source_path = source_path;
    try {
        bundle.task = parse_task(j.at("task"), where);
        bundle.script = parse_script(j.value("script", json::object()), where);
    } catch (const FixtureInvalid&) {
        throw;
    } catch (const std::exception& e) {
        throw FixtureInvalid(where + ": " + e.what());
    }
    bundle.task.validate();
    return bundle;
}

FixtureBundle load_fixture_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FixtureInvalid("cannot open fixture file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw FixtureInvalid("fixture file " + path + ": JSON parse error: " + e.what());
    }
    return parse_fixture(j, path);
}

std::vector<FixtureBundle> load_fixture_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw FixtureInvalid("fixture directory does not exist: " + dir);
    }
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            paths.push_back(entry.path().string());
        }
    }
    std::sort(paths.begin(), paths.end());
    std::vector<FixtureBundle> bundles;
    std::set<std::string> ids;
    for (const auto& p : paths) {
        bundles.push_back(load_fixture_file(p));
        if (!ids.insert(bundles.back().task.id).second) {
            throw FixtureInvalid("duplicate task id '" + bundles.back().task.id + "' in " + p);
        }
    }
    std::sort(bundles.begin(), bundles.end(),
              [](const FixtureBundle& a, const FixtureBundle& b) { return a.task.id < b.task.id; });
    return bundles;
}

json fixture_to_json(const FixtureBundle& bundle) {
    json j;
    j["schema"] = "fixture/1";
    j["task"] = task_to_json(bundle.task);
    j["script"] = script_to_json(bundle.script);
    return j;
}

} // namespace webuq::webenv
