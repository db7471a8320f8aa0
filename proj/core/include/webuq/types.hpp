#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace webuq {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

enum class OperationKind : std::uint8_t {
    Click,
    Type,
    Select,
    Scroll,
    GoBack,
    Goto,
    Stop,
};

const char* to_string(OperationKind op);
OperationKind operation_kind_from_string(const std::string& s);

/// The atomic web operation: an element id, an operation kind, and an
/// optional value. `value` carries the typed text for Type/Select, the
/// target page id for Goto, and the final answer for Stop. Empty string
/// means "absent".
struct Action {
    OperationKind op = OperationKind::Click;
    std::string element;
    std::string value;

    bool operator==(const Action&) const = default;

    /// True when this operation kind addresses an element.
    bool needs_element() const {
        return op == OperationKind::Click || op == OperationKind::Type ||
               op == OperationKind::Select;
    }
    bool needs_value() const {
        return op == OperationKind::Type || op == OperationKind::Select;
    }

    /// Canonical single-line rendering, e.g. `click(sort_menu)` or
    /// `type(search_box, "wireless mouse")`.
    std::string to_string() const;

    /// Stable content hash; keys exclusion sets and seeds.
    std::uint64_t content_hash() const;

    /// Throws webuq::Error when the kind/element/value combination is
    /// inconsistent (Type without value, Click without element, ...).
    void validate() const;
};

struct ActionLess {
    bool operator()(const Action& a, const Action& b) const {
        if (a.op != b.op) return a.op < b.op;
        if (a.element != b.element) return a.element < b.element;
        return a.value < b.value;
    }
};

void to_json(json& j, const Action& a);
void from_json(const json& j, Action& a);

// ---------------------------------------------------------------------------
// Observations (accessibility-tree style)
// ---------------------------------------------------------------------------

struct Element {
    std::string id;
    std::string role;
    std::string name;
    std::string value;
    bool interactable = false;

    bool operator==(const Element&) const = default;
};

void to_json(json& j, const Element& e);
void from_json(const json& j, Element& e);

enum class ObservationStatus : std::uint8_t { Ok, ExecutionError };

const char* to_string(ObservationStatus s);

struct Observation {
    std::string page_id;
    std::vector<Element> elements;
    ObservationStatus status = ObservationStatus::Ok;
    std::string error_text;
    int step_counter = 0;

    bool operator==(const Observation&) const = default;

    bool has_element(const std::string& id) const;
    const Element* find_element(const std::string& id) const;

    /// Short content fingerprint for logs: page id, element count and a
    /// hash of the rendered tree.
    std::string digest() const;

    /// Text rendering used for prompts and transcripts, one element per
    /// line in role/name/value form.
    std::string render_text() const;
};

void to_json(json& j, const Observation& o);
void from_json(const json& j, Observation& o);

// ---------------------------------------------------------------------------
// Execution history (shared between planner and provider transports)
// ---------------------------------------------------------------------------

struct HistoryEntry {
    int step_index = 0;
    std::string subgoal;
    Action action;
    std::string observation_digest;
    double reward = 0.0;
};

void to_json(json& j, const HistoryEntry& e);
void from_json(const json& j, HistoryEntry& e);

/// Ordered record of executed steps. Step indices strictly increase.
struct ExecutionHistory {
    std::vector<HistoryEntry> entries;

    void append(HistoryEntry entry);
    std::string render_text() const;
};

} // namespace webuq
