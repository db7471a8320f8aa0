#include "webuq/types.hpp"

#include "webuq/errors.hpp"
#include "webuq/util.hpp"

#include <sstream>

namespace webuq {

const char* to_string(OperationKind op) {
    switch (op) {
        case OperationKind::Click: return "click";
        case OperationKind::Type: return "type";
        case OperationKind::Select: return "select";
        case OperationKind::Scroll: return "scroll";
        case OperationKind::GoBack: return "go_back";
        case OperationKind::Goto: return "goto";
        case OperationKind::Stop: return "stop";
    }
    return "?";
}

OperationKind operation_kind_from_string(const std::string& s) {
    if (s == "click") return OperationKind::Click;
    if (s == "type") return OperationKind::Type;
    if (s == "select") return OperationKind::Select;
    if (s == "scroll") return OperationKind::Scroll;
    if (s == "go_back") return OperationKind::GoBack;
    if (s == "goto") return OperationKind::Goto;
    if (s == "stop") return OperationKind::Stop;
    throw Error("unknown operation kind: " + s);
}

std::string Action::to_string() const {
    std::ostringstream out;
    out << webuq::to_string(op) << '(';
    bool first = true;
    if (!element.empty()) {
        out << element;
        first = false;
    }
    if (!value.empty() || op == OperationKind::Stop) {
        if (!first) out << ", ";
        out << '"' << value << '"';
    }
    out << ')';
    return out.str();
}

std::uint64_t Action::content_hash() const {
    std::uint64_t h = fnv1a64(webuq::to_string(op));
    h = mix64(h, fnv1a64(element));
    h = mix64(h, fnv1a64(value));
    return h;
}

void Action::validate() const {
    if (needs_element() && element.empty()) {
        throw Error("action " + std::string(webuq::to_string(op)) + " requires an element");
    }
    if (needs_value() && value.empty()) {
        throw Error("action " + std::string(webuq::to_string(op)) + " requires a value");
    }
    if (op == OperationKind::Goto && value.empty()) {
        throw Error("goto requires a target page id in value");
    }
}

void to_json(json& j, const Action& a) {
    j = json{{"op", to_string(a.op)}};
    if (!a.element.empty()) j["element"] = a.element;
    if (!a.value.empty()) j["value"] = a.value;
}

void from_json(const json& j, Action& a) {
    a.op = operation_kind_from_string(j.at("op").get<std::string>());
    a.element = j.value("element", std::string{});
    a.value = j.value("value", std::string{});
}

void to_json(json& j, const Element& e) {
    j = json{{"id", e.id}, {"role", e.role}, {"name", e.name}};
    if (!e.value.empty()) j["value"] = e.value;
    j["interactable"] = e.interactable;
}

void from_json(const json& j, Element& e) {
    e.id = j.at("id").get<std::string>();
    e.role = j.at("role").get<std::string>();
    e.name = j.value("name", std::string{});
    e.value = j.value("value", std::string{});
    e.interactable = j.value("interactable", false);
}

const char* to_string(ObservationStatus s) {
    return s == ObservationStatus::Ok ? "ok" : "execution_error";
}

bool Observation::has_element(const std::string& id) const {
    return find_element(id) != nullptr;
}

const Element* Observation::find_element(const std::string& id) const {
    for (const auto& e : elements) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

std::string Observation::render_text() const {
    std::ostringstream out;
    out << "page: " << page_id << '\n';
    if (status == ObservationStatus::ExecutionError) {
        out << "status: execution error: " << error_text << '\n';
    }
    for (const auto& e : elements) {
        out << "  [" << e.id << "] " << e.role << " \"" << e.name << '"';
        if (!e.value.empty()) out << " value=\"" << e.value << '"';
        if (!e.interactable) out << " (static)";
        out << '\n';
    }
    return out.str();
}

std::string Observation::digest() const {
    std::uint64_t h = fnv1a64(render_text());
    h = mix64(h, static_cast<std::uint64_t>(step_counter));
    std::ostringstream out;
    out << page_id << '#' << elements.size() << ':' << to_hex(h, 12);
    return out.str();
}

void to_json(json& j, const Observation& o) {
    j = json{
        {"page_id", o.page_id},
        {"elements", o.elements},
        {"status", to_string(o.status)},
        {"step_counter", o.step_counter},
    };
    if (o.status == ObservationStatus::ExecutionError) {
        j["error_text"] = o.error_text;
    }
}

void from_json(const json& j, Observation& o) {
    o.page_id = j.at("page_id").get<std::string>();
    o.elements = j.value("elements", std::vector<Element>{});
    o.status = j.value("status", std::string{"ok"}) == "ok" ? ObservationStatus::Ok
                                                            : ObservationStatus::ExecutionError;
    o.error_text = j.value("error_text", std::string{});
    o.step_counter = j.value("step_counter", 0);
}

void to_json(json& j, const HistoryEntry& e) {
    j = json{
        {"step", e.step_index},
        {"subgoal", e.subgoal},
        {"action", e.action},
        {"observation", e.observation_digest},
        {"reward", e.reward},
    };
}

void from_json(const json& j, HistoryEntry& e) {
    e.step_index = j.at("step").get<int>();
    e.subgoal = j.value("subgoal", std::string{});
    e.action = j.at("action").get<Action>();
    e.observation_digest = j.value("observation", std::string{});
    e.reward = j.value("reward", 0.0);
}

void ExecutionHistory::append(HistoryEntry entry) {
    if (!entries.empty() && entry.step_index <= entries.back().step_index) {
        throw Error("history step indices must strictly increase");
    }
    entries.push_back(std::move(entry));
}

std::string ExecutionHistory::render_text() const {
    if (entries.empty()) return "(no steps executed yet)\n";
    std::ostringstream out;
    for (const auto& e : entries) {
        out << "step " << e.step_index << ": " << e.action.to_string()
            << " for \"" << e.subgoal << "\" -> " << e.observation_digest << '\n';
    }
    return out.str();
}

} // namespace webuq
