#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace webuq::trace {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Line-delimited trace records: one JSON object per episode stage, each
/// carrying a schema version ("v"). Replay and analysis read these files
/// without any access to providers or environments.
std::string to_jsonl(const std::vector<json>& records);
std::vector<json> from_jsonl(const std::string& text);

std::vector<json> read_trace_file(const std::string& path);
void write_trace_file(const std::string& path, const std::vector<json>& records);

/// Deterministic human-readable transcript of a recorded episode.
std::string render_transcript(const std::vector<json>& records);

} // namespace webuq::trace
