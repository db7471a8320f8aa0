#include "webuq/llm_backend.hpp"

#include "httplib.h"
#include "webuq/errors.hpp"
#include "webuq/util.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <thread>

namespace webuq::agents {

void to_json(json& j, const LlmBackendConfig& c) {
    j = json{
        {"endpoint", c.endpoint},
        {"model", c.model},
        {"temperature", c.temperature},
        {"timeout_ms", c.timeout_ms},
        {"max_retries", c.max_retries},
        {"auth_token_env", c.auth_token_env},
        {"prompt_dir", c.prompt_dir},
        {"min_request_interval_ms", c.min_request_interval_ms},
    };
}

void from_json(const json& j, LlmBackendConfig& c) {
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model = j.value("model", c.model);
    c.temperature = j.value("temperature", c.temperature);
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.auth_token_env = j.value("auth_token_env", c.auth_token_env);
    c.prompt_dir = j.value("prompt_dir", c.prompt_dir);
    c.min_request_interval_ms = j.value("min_request_interval_ms", c.min_request_interval_ms);
}

namespace {

std::string render_history(const ExecutionHistory& history) {
    return history.render_text();
}

std::string render_objectives(const std::vector<std::string>& objectives) {
    std::string out;
    for (const auto& o : objectives) {
        out += "- " + o + "\n";
    }
    return out;
}

std::string render_exclusions(const std::vector<Action>& excluded) {
    if (excluded.empty()) return "(none)\n";
    std::string out;
    for (const auto& a : excluded) {
        out += "- " + a.to_string() + "\n";
    }
    return out;
}

} // namespace

LiveBackend::LiveBackend(LlmBackendConfig config) : config_(std::move(config)) {
    if (const char* tok = std::getenv(config_.auth_token_env.c_str())) {
        token_ = tok;
    }
    // split "http://host:port/base" into client target and base path
    const auto& url = config_.endpoint;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint must be an http(s) URL: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        scheme_host_port_ = url;
        base_path_.clear();
    } else {
        scheme_host_port_ = url.substr(0, path_start);
        base_path_ = url.substr(path_start);
        while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
    }
}

AgentProviders LiveBackend::providers() {
    AgentProviders p;
    p.analysis = this;
    p.explicit_planner = this;
    p.implicit_planner = this;
    p.reasoning = this;
    p.evaluation = this;
    return p;
}

std::vector<std::string> LiveBackend::drain_warnings() {
    std::scoped_lock lock(warnings_mutex_);
    return std::exchange(warnings_, {});
}

std::string LiveBackend::render_template(const std::string& name,
                                         const std::map<std::string, std::string>& vars) const {
    namespace fs = std::filesystem;
    const auto path = (fs::path(config_.prompt_dir) / (name + ".txt")).string();
    std::string text = read_text_file(path);
    for (const auto& [key, value] : vars) {
        const std::string needle = "{{" + key + "}}";
        std::size_t pos = 0;
        while ((pos = text.find(needle, pos)) != std::string::npos) {
            text.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    return text;
}

void LiveBackend::rate_limit() {
    if (config_.min_request_interval_ms <= 0) return;
    std::scoped_lock lock(limiter_mutex_);
    const auto interval = std::chrono::milliseconds(config_.min_request_interval_ms);
    const auto now = std::chrono::steady_clock::now();
    if (last_request_.time_since_epoch().count() != 0 && now - last_request_ < interval) {
        std::this_thread::sleep_for(interval - (now - last_request_));
    }
    last_request_ = std::chrono::steady_clock::now();
}

std::string LiveBackend::complete(const std::string& role, const std::string& prompt) {
    const std::string system_prompt = render_template("system", {});

    json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    body["messages"] = json::array({
        json{{"role", "system"}, {"content", system_prompt}},
        json{{"role", "user"}, {"content", prompt}},
    });

    httplib::Headers headers;
    if (!token_.empty()) {
        headers.emplace("Authorization", "Bearer " + token_);
    }

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        rate_limit();
        httplib::Client client(scheme_host_port_);
        client.set_connection_timeout(std::chrono::milliseconds(config_.timeout_ms));
        client.set_read_timeout(std::chrono::milliseconds(config_.timeout_ms));
        client.set_write_timeout(std::chrono::milliseconds(config_.timeout_ms));

        auto res = client.Post(base_path_ + "/chat/completions", headers, body.dump(),
                               "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw BackendUnavailable(role + ": HTTP " + std::to_string(res->status) + ": " +
                                     res->body);
        }
        try {
            const json reply = json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const std::exception& e) {
            throw MalformedOutput(role + ": response envelope unparseable: " + e.what());
        }
    }
    throw BackendUnavailable(role + ": " + last_error + " after " +
                             std::to_string(config_.max_retries + 1) + " attempts");
}

json LiveBackend::extract_json_object(const std::string& content) {
    const auto start = content.find('{');
    if (start == std::string::npos) {
        throw MalformedOutput("no JSON object in model output");
    }
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < content.size(); ++i) {
        const char c = content[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            --depth;
            if (depth == 0) {
                const auto text = content.substr(start, i - start + 1);
                try {
                    return json::parse(text);
                } catch (const std::exception& e) {
                    throw MalformedOutput(std::string{"invalid JSON object: "} + e.what());
                }
            }
        }
    }
    throw MalformedOutput("unterminated JSON object in model output");
}

json LiveBackend::complete_json(const std::string& role, const std::string& prompt) {
    try {
        return extract_json_object(complete(role, prompt));
    } catch (const MalformedOutput&) {
        // one repair round with an explicit format reminder
        const std::string repair =
            prompt + "\n\nYour previous reply could not be parsed. "
                     "Respond with exactly one valid JSON object and nothing else.";
        return extract_json_object(complete(role, repair));
    }
}

AnalysisResponse LiveBackend::analyze_task(const AnalysisRequest& req) {
    const auto prompt = render_template("analysis", {
                                                        {"instruction", req.instruction},
                                                        {"observation", req.observation.render_text()},
                                                        {"history", render_history(req.history)},
                                                    });
    const json j = complete_json("analysis", prompt);
    AnalysisResponse out;
    try {
        out.remaining_objectives = j.at("remaining").get<std::vector<std::string>>();
        out.u_plan = j.at("uncertainty").get<double>();
    } catch (const std::exception& e) {
        throw MalformedOutput(std::string{"analysis payload: "} + e.what());
    }
    return out;
}

std::vector<std::string> LiveBackend::generate_plan(const PlanRequest& req) {
    const char* name = req.kind == PlanKind::Explicit ? "plan_explicit" : "plan_implicit";
    const auto prompt = render_template(name, {
                                                  {"objectives", render_objectives(req.objectives)},
                                                  {"observation", req.observation.render_text()},
                                              });
    const json j = complete_json(name, prompt);
    std::vector<std::string> plan;
    try {
        if (req.kind == PlanKind::Explicit) {
            plan = j.at("subgoals").get<std::vector<std::string>>();
        } else if (j.contains("subgoal")) {
            plan = {j.at("subgoal").get<std::string>()};
        } else {
            plan = {j.at("subgoals").at(0).get<std::string>()};
        }
    } catch (const std::exception& e) {
        throw MalformedOutput(std::string{name} + " payload: " + e.what());
    }
    plan.erase(std::remove_if(plan.begin(), plan.end(),
                              [](const std::string& s) { return s.empty(); }),
               plan.end());
    if (plan.empty()) {
        throw MalformedOutput(std::string{name} + ": empty plan");
    }
    if (req.kind == PlanKind::Implicit) {
        plan.resize(1);
    }
    return plan;
}

ReasoningResponse LiveBackend::propose_actions(const ReasoningRequest& req) {
    const auto prompt =
        render_template("reasoning", {
                                         {"subgoal", req.subgoal},
                                         {"observation", req.observation.render_text()},
                                         {"exclusions", render_exclusions(req.excluded)},
                                         {"k", std::to_string(req.k)},
                                     });
    const json j = complete_json("reasoning", prompt);

    ReasoningResponse out;
    std::vector<std::string> warnings;
    try {
        for (const auto& cj : j.at("candidates")) {
            ActionCandidate cand;
            cand.action.op = operation_kind_from_string(cj.at("operation").get<std::string>());
            cand.action.element = cj.value("element", std::string{});
            cand.action.value = cj.value("value", std::string{});
            cand.confidence = clamp_confidence(cj.at("confidence").get<double>(), &warnings);
            out.candidates.push_back(std::move(cand));
        }
    } catch (const std::exception& e) {
        throw MalformedOutput(std::string{"reasoning payload: "} + e.what());
    }

    // boundary filtering: exclusions are never returned, k is a hard cap
    auto& cands = out.candidates;
    cands.erase(std::remove_if(cands.begin(), cands.end(),
                               [&](const ActionCandidate& c) {
                                   return std::any_of(
                                       req.excluded.begin(), req.excluded.end(),
                                       [&](const Action& a) { return a == c.action; });
                               }),
                cands.end());
    if (cands.empty()) {
        throw EmptyAfterFiltering("reasoning: every candidate was excluded");
    }
    if (static_cast<int>(cands.size()) > req.k) {
        cands.resize(static_cast<std::size_t>(req.k));
    }
    flag_unresolved(out, req.observation);

    if (!warnings.empty()) {
        std::scoped_lock lock(warnings_mutex_);
        warnings_.insert(warnings_.end(), warnings.begin(), warnings.end());
    }
    return out;
}

EvaluationResponse LiveBackend::evaluate_state(const EvaluationRequest& req) {
    const auto prompt = render_template(
        "evaluation", {
                          {"instruction", req.instruction},
                          {"subgoal", req.subgoal},
                          {"observation", req.observation.render_text()},
                          {"stopped", req.stopped ? "yes" : "no"},
                          {"answer", req.stop_answer},
                      });
    const json j = complete_json("evaluation", prompt);
    EvaluationResponse out;
    std::vector<std::string> warnings;
    try {
        out.s_base = clamp_score(j.at("score").get<double>(), &warnings);
        out.subgoal_complete = j.value("subgoal_complete", false);
        out.task_complete = j.value("task_complete", false);
        out.rationale = j.value("rationale", std::string{});
    } catch (const std::exception& e) {
        throw MalformedOutput(std::string{"evaluation payload: "} + e.what());
    }
    if (!warnings.empty()) {
        std::scoped_lock lock(warnings_mutex_);
        warnings_.insert(warnings_.end(), warnings.begin(), warnings.end());
    }
    return out;
}

} // namespace webuq::agents
