#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "webuq/agents.hpp"
#include "webuq/fixture.hpp"

namespace webuq::agents {

/// Optional fault model: each resolved candidate a reasoning response
/// would return is independently replaced, with the given rate, by a
/// click on a nonexistent element carrying a confidence drawn from the
/// profile. Candidates that already reference nonexistent elements are
/// left alone.
struct HallucinationInjection {
    double rate = 0.0; // in [0, 1]
    double confidence_min = 0.1;
    double confidence_max = 0.35;
};

struct ScriptedBackendConfig {
    std::uint64_t seed = 0;
    std::optional<HallucinationInjection> injection;
};

/// Deterministic provider backed by one task's script rules. Randomness
/// (injection only) is derived from the seed plus the request content,
/// so the response to a given request does not depend on call order or
/// on interleaving with other episodes.
class ScriptedBackend final : public AnalysisProvider,
                              public PlanProvider,
                              public ReasoningProvider,
                              public EvaluationProvider {
public:
    ScriptedBackend(std::string task_id, webenv::ProviderScript script,
                    ScriptedBackendConfig config);

    AnalysisResponse analyze_task(const AnalysisRequest& req) override;
    std::vector<std::string> generate_plan(const PlanRequest& req) override;
    ReasoningResponse propose_actions(const ReasoningRequest& req) override;
    EvaluationResponse evaluate_state(const EvaluationRequest& req) override;

    AgentProviders providers();

    const std::string& task_id() const { return task_id_; }

private:
    std::uint64_t request_seed(const ReasoningRequest& req) const;

    std::string task_id_;
    webenv::ProviderScript script_;
    ScriptedBackendConfig config_;
};

/// Owns one ScriptedBackend per task of a fixture corpus.
class ScriptedProviderSource final : public ProviderSource {
public:
    ScriptedProviderSource(const std::vector<webenv::FixtureBundle>& bundles,
                           ScriptedBackendConfig config);

    AgentProviders bind(const std::string& task_id) override;

private:
    std::map<std::string, std::unique_ptr<ScriptedBackend>> backends_;
};

} // namespace webuq::agents
