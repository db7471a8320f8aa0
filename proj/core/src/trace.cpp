#include "webuq/trace.hpp"

#include "webuq/errors.hpp"
#include "webuq/util.hpp"

#include <sstream>

namespace webuq::trace {

std::string to_jsonl(const std::vector<json>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

std::vector<json> from_jsonl(const std::string& text) {
    std::vector<json> records;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            records.push_back(json::parse(line));
        } catch (const std::exception& e) {
            throw Error("trace line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return records;
}

std::vector<json> read_trace_file(const std::string& path) {
    auto records = from_jsonl(read_text_file(path));
    for (const auto& r : records) {
        if (r.value("v", 0) != kSchemaVersion) {
            throw Error("trace record with unsupported schema version in " + path);
        }
    }
    return records;
}

void write_trace_file(const std::string& path, const std::vector<json>& records) {
    write_text_file(path, to_jsonl(records));
}

namespace {

std::string render_action(const json& a) {
    std::string out = a.value("op", std::string{"?"});
    out += '(';
    bool first = true;
    if (a.contains("element")) {
        out += a["element"].get<std::string>();
        first = false;
    }
    if (a.contains("value")) {
        if (!first) out += ", ";
        out += '"' + a["value"].get<std::string>() + '"';
    }
    out += ')';
    return out;
}

} // namespace

std::string render_transcript(const std::vector<json>& records) {
    std::ostringstream out;
    for (const auto& r : records) {
        const auto type = r.value("type", std::string{});
        if (type == "episode_start") {
            out << "=== task " << r.value("task", std::string{}) << " ===\n";
            out << "instruction: " << r.value("instruction", std::string{}) << '\n';
        } else if (type == "analysis") {
            out << "[step " << r.value("step", 0) << "] analysis: u_plan=" << r.value("u_plan", 0.0)
                << " mode=" << r.value("mode", std::string{}) << " objectives=";
            bool first = true;
            for (const auto& o : r.value("objectives", json::array())) {
                if (!first) out << "; ";
                out << o.get<std::string>();
                first = false;
            }
            out << '\n';
        } else if (type == "subgoal") {
            out << "[step " << r.value("step", 0) << "] subgoal (" << r.value("origin_mode", std::string{})
                << "): " << r.value("description", std::string{}) << '\n';
        } else if (type == "search") {
            out << "[step " << r.value("step", 0) << "] search: "
                << (r.value("accepted", false) ? "accepted" : "budget-committed")
                << ", expansions=" << r.value("expansions_used", 0) << ", path=";
            bool first = true;
            for (const auto& a : r.value("committed_path", json::array())) {
                if (!first) out << " -> ";
                out << render_action(a);
                first = false;
            }
            out << '\n';
        } else if (type == "action") {
            out << "[step " << r.value("step", 0) << "] applied " << render_action(r.value("action", json::object()))
                << " -> " << r.value("status", std::string{}) << " @ " << r.value("page", std::string{});
            if (r.contains("error")) out << " (" << r["error"].get<std::string>() << ')';
            out << '\n';
        } else if (type == "event") {
            out << "[step " << r.value("step", 0) << "] event: " << r.value("kind", std::string{});
            if (r.contains("detail")) out << " (" << r["detail"].get<std::string>() << ')';
            out << '\n';
        } else if (type == "episode_end") {
            out << "verdict: " << r.value("verdict", std::string{}) << " after "
                << r.value("env_steps", 0) << " env steps, " << r.value("planning_steps", 0)
                << " planning steps\n";
            if (r.contains("error")) out << "error: " << r["error"].get<std::string>() << '\n';
        }
    }
    return out.str();
}

} // namespace webuq::trace
