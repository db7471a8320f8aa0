#include "webuq/webenv.hpp"

#include "webuq/errors.hpp"

#include <algorithm>

namespace webuq::webenv {

WebEnvironment::WebEnvironment(TaskFixture fixture)
    : WebEnvironment(std::make_shared<const TaskFixture>(std::move(fixture))) {}

WebEnvironment::WebEnvironment(std::shared_ptr<const TaskFixture> fixture)
    : fixture_(std::move(fixture)) {
    fixture_->validate();
    state_.fixture = fixture_;
    state_.current_page = fixture_->initial_page;
}

WebEnvironment::WebEnvironment(std::shared_ptr<const TaskFixture> fixture, EnvSnapshot state)
    : fixture_(std::move(fixture)), state_(std::move(state)) {
    state_.fixture = fixture_;
}

EnvSnapshot WebEnvironment::snapshot() const {
    return state_;
}

WebEnvironment WebEnvironment::restore(const EnvSnapshot& snap) {
    if (!snap.fixture) throw Error("snapshot without fixture");
    return WebEnvironment(snap.fixture, snap);
}

WebEnvironment::PopupStatus WebEnvironment::active_popup() const {
    const auto& muts = fixture_->mutations;
    for (std::size_t i = 0; i < muts.size(); ++i) {
        const auto& m = muts[i];
        if (m.kind != MutationRule::Kind::Popup) continue;
        if (state_.dismissed_popups.count(i)) continue;
        if (state_.step_counter < m.after_step) continue;
        if (!m.page.empty() && m.page != state_.current_page) continue;
        return {true, i, m.blocking};
    }
    return {};
}

std::vector<Element> WebEnvironment::visible_elements(const std::string& page_id) const {
    const Page* page = fixture_->find_page(page_id);
    if (!page) return {};

    std::vector<Element> out;
    // popup overlay renders first
    const auto popup = active_popup();
    if (popup.active && page_id == state_.current_page) {
        const auto& m = fixture_->mutations[popup.rule_index];
        out.insert(out.end(), m.popup_elements.begin(), m.popup_elements.end());
    }

    for (const auto& el : page->elements) {
        bool removed = false;
        for (const auto& m : fixture_->mutations) {
            if (m.kind == MutationRule::Kind::RemoveElement && m.page == page_id &&
                m.element_id == el.id && state_.step_counter >= m.after_step) {
                removed = true;
                break;
            }
        }
        if (!removed) out.push_back(el);
    }
    for (const auto& m : fixture_->mutations) {
        if (m.kind == MutationRule::Kind::AddElement && m.page == page_id &&
            state_.step_counter >= m.after_step) {
            out.push_back(m.element);
        }
    }
    for (auto& el : out) {
        auto it = state_.value_overrides.find({page_id, el.id});
        if (it != state_.value_overrides.end()) {
            el.value = it->second;
        }
    }
    return out;
}

std::string WebEnvironment::visible_element_value(const std::string& page_id,
                                                  const std::string& element_id) const {
    for (const auto& el : visible_elements(page_id)) {
        if (el.id == element_id) return el.value;
    }
    return {};
}

Observation WebEnvironment::observe() const {
    Observation obs;
    obs.page_id = state_.current_page;
    obs.elements = visible_elements(state_.current_page);
    obs.status = ObservationStatus::Ok;
    obs.step_counter = state_.step_counter;
    return obs;
}

Observation WebEnvironment::error_observation(const std::string& message) const {
    Observation obs = observe();
    obs.status = ObservationStatus::ExecutionError;
    obs.error_text = message;
    return obs;
}

const TransitionRule* WebEnvironment::match_transition(const Action& action) const {
    const TransitionRule* wildcard = nullptr;
    for (const auto& t : fixture_->transitions) {
        if (t.page != state_.current_page || t.op != action.op || t.element != action.element) {
            continue;
        }
        if (!t.value.empty()) {
            if (t.value == action.value) return &t; // value-specific match wins
        } else if (!wildcard) {
            wildcard = &t;
        }
    }
    return wildcard;
}

Observation WebEnvironment::apply(const Action& action) {
    if (state_.finished) {
        throw EpisodeFinished("episode already finished for task '" + fixture_->id + "'");
    }
    // The step counter advances on every apply, error steps included,
    // so mutation timers see hallucinated actions too.
    state_.step_counter += 1;

    switch (action.op) {
        case OperationKind::Stop:
            state_.finished = true;
            state_.stop_answer = action.value;
            return observe();

        case OperationKind::Scroll: {
            const auto popup = active_popup();
            if (popup.active && popup.blocking) {
                return error_observation("a popup blocks the page");
            }
            return observe();
        }

        case OperationKind::GoBack: {
            const auto popup = active_popup();
            if (popup.active && popup.blocking) {
                return error_observation("a popup blocks the page");
            }
            if (!state_.page_history.empty()) {
                state_.current_page = state_.page_history.back();
                state_.page_history.pop_back();
            }
            return observe();
        }

        case OperationKind::Goto: {
            const auto popup = active_popup();
            if (popup.active && popup.blocking) {
                return error_observation("a popup blocks the page");
            }
            if (action.value.empty()) {
                return error_observation("goto without a target page");
            }
            if (!fixture_->find_page(action.value)) {
                return error_observation("no such page: " + action.value);
            }
            state_.page_history.push_back(state_.current_page);
            state_.current_page = action.value;
            return observe();
        }

        case OperationKind::Click:
        case OperationKind::Type:
        case OperationKind::Select:
            break;
    }

    if (action.element.empty()) {
        return error_observation("action requires an element");
    }
    if (action.needs_value() && action.value.empty()) {
        return error_observation("action requires a value");
    }

    const auto popup = active_popup();
    if (popup.active) {
        const auto& m = fixture_->mutations[popup.rule_index];
        if (action.op == OperationKind::Click && action.element == m.dismiss_element) {
            state_.dismissed_popups.insert(popup.rule_index);
            return observe();
        }
        if (popup.blocking) {
            return error_observation("a popup blocks the page");
        }
        // non-blocking: fall through; popup elements are only targets for dismissal
        bool is_popup_element = false;
        for (const auto& el : m.popup_elements) is_popup_element |= el.id == action.element;
        if (is_popup_element) {
            return error_observation("popup element '" + action.element + "' is not actionable");
        }
    }

    const auto elements = visible_elements(state_.current_page);
    const Element* target = nullptr;
    for (const auto& el : elements) {
        if (el.id == action.element) {
            target = &el;
            break;
        }
    }
    if (!target) {
        return error_observation("no such element: " + action.element);
    }
    if (!target->interactable) {
        return error_observation("element not interactable: " + action.element);
    }

    // Typed/selected values persist on the element before any navigation.
    if (action.op == OperationKind::Type || action.op == OperationKind::Select) {
        state_.value_overrides[{state_.current_page, action.element}] = action.value;
    }

    if (const TransitionRule* rule = match_transition(action)) {
        for (const auto& sv : rule->set_values) {
            state_.value_overrides[{sv.page, sv.element}] = sv.value;
        }
        if (!rule->to.empty()) {
            state_.page_history.push_back(state_.current_page);
            state_.current_page = rule->to;
        }
    }
    return observe();
}

bool WebEnvironment::evaluate_predicate(const SuccessPredicate& pred) const {
    switch (pred.kind) {
        case SuccessPredicate::Kind::All:
            return std::all_of(pred.children.begin(), pred.children.end(),
                               [&](const SuccessPredicate& c) { return evaluate_predicate(c); });
        case SuccessPredicate::Kind::Any:
            return std::any_of(pred.children.begin(), pred.children.end(),
                               [&](const SuccessPredicate& c) { return evaluate_predicate(c); });
        case SuccessPredicate::Kind::Stopped:
            return state_.finished;
        case SuccessPredicate::Kind::AnswerEquals: {
            auto trim = [](const std::string& s) {
                const auto b = s.find_first_not_of(" \t\n\r");
                if (b == std::string::npos) return std::string{};
                const auto e = s.find_last_not_of(" \t\n\r");
                return s.substr(b, e - b + 1);
            };
            return trim(state_.stop_answer) == trim(pred.value);
        }
        case SuccessPredicate::Kind::AnswerContains:
            return state_.stop_answer.find(pred.value) != std::string::npos;
        case SuccessPredicate::Kind::PageIs:
            return state_.current_page == pred.value;
        case SuccessPredicate::Kind::ElementValue:
            return visible_element_value(pred.page, pred.element) == pred.value;
    }
    return false;
}

bool WebEnvironment::judge() const {
    if (!state_.finished) {
        return false; // ran out of steps without Stop
    }
    return evaluate_predicate(fixture_->success);
}

} // namespace webuq::webenv
