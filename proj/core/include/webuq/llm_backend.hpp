#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "webuq/agents.hpp"

namespace webuq::agents {

struct LlmBackendConfig {
    std::string endpoint = "http://localhost:8080/v1";
    std::string model = "gpt-4-turbo";
    double temperature = 0.3;
    int timeout_ms = 60000;
    int max_retries = 2;
    std::string auth_token_env = "WEBUQ_API_TOKEN";
    std::string prompt_dir = "prompts";
    int min_request_interval_ms = 0; // request-rate limiter, 0 = off
};

void to_json(json& j, const LlmBackendConfig& c);
void from_json(const json& j, LlmBackendConfig& c);

/// Chat-completion client for the four agent roles. Prompts are plain
/// template files with {{placeholder}} substitution; the model is asked
/// for a single JSON object per role. Transport failures are retried up
/// to max_retries and then surface as BackendUnavailable; unparseable
/// payloads get exactly one repair retry and then MalformedOutput. Every
/// call resolves within timeout * (1 + max_retries) plus the repair
/// round.
class LiveBackend final : public AnalysisProvider,
                          public PlanProvider,
                          public ReasoningProvider,
                          public EvaluationProvider {
public:
    explicit LiveBackend(LlmBackendConfig config);

    AnalysisResponse analyze_task(const AnalysisRequest& req) override;
    std::vector<std::string> generate_plan(const PlanRequest& req) override;
    ReasoningResponse propose_actions(const ReasoningRequest& req) override;
    EvaluationResponse evaluate_state(const EvaluationRequest& req) override;

    AgentProviders providers();

    /// Warnings produced by boundary clamping since construction.
    std::vector<std::string> drain_warnings();

    // exposed for tests
    static json extract_json_object(const std::string& content);

private:
    std::string render_template(const std::string& name,
                                const std::map<std::string, std::string>& vars) const;
    std::string complete(const std::string& role, const std::string& prompt);
    json complete_json(const std::string& role, const std::string& prompt);
    void rate_limit();

    LlmBackendConfig config_;
    std::string token_;
    // endpoint split once at construction
    std::string scheme_host_port_;
    std::string base_path_;

    std::mutex limiter_mutex_;
    std::chrono::steady_clock::time_point last_request_{};

    std::mutex warnings_mutex_;
    std::vector<std::string> warnings_;
};

/// Live providers are stateless across tasks; bind returns the same set.
class LiveProviderSource final : public ProviderSource {
public:
    explicit LiveProviderSource(LlmBackendConfig config) : backend_(std::move(config)) {}

    AgentProviders bind(const std::string&) override { return backend_.providers(); }

    LiveBackend& backend() { return backend_; }

private:
    LiveBackend backend_;
};

} // namespace webuq::agents
