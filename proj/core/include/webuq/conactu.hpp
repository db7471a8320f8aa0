#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace webuq::conactu {

using json = nlohmann::ordered_json;

/// Failure-handling regime for a candidate set whose evaluation came in
/// below the acceptance threshold, keyed by where its uncertainty lives.
enum class Quadrant : int {
    StrictPenalty,  // high EU, high AU: chaotic, forbid the path
    RelaxedPenalty, // high EU, low AU: hallucination, back off
    Normal,         // low EU, high AU: genuine ambiguity, keep exploring siblings
    Regenerate,     // low EU, low AU: confident miss, ask for new candidates
};

const char* to_string(Quadrant q);
Quadrant quadrant_from_string(const std::string& s);

/// Cutoffs separating "high" from "low". High means strictly greater.
struct UncertaintyThresholds {
    double theta_eu = 0.5;
    double theta_au = 0.5;
};

void to_json(json& j, const UncertaintyThresholds& t);
void from_json(const json& j, UncertaintyThresholds& t);

/// Per-candidate confidence scores c_1..c_K, each in [0, 1], K >= 1.
/// Construction validates; downstream code can rely on the invariants.
class ConfidenceVector {
public:
    explicit ConfidenceVector(std::vector<double> values);

    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }

private:
    std::vector<double> values_;
};

/// Full decomposition for one candidate set.
struct UncertaintyReport {
    std::vector<double> p; // pseudo-probabilities, sum to 1
    double evidence = 0.0; // mean confidence E
    double entropy = 0.0;  // normalized predictive entropy H in [0, 1]
    double eu = 0.0;       // epistemic: 1 - E
    double au = 0.0;       // aleatoric: H * E
    Quadrant quadrant = Quadrant::Regenerate;
};

void to_json(json& j, const UncertaintyReport& r);

/// p_i = c_i / sum(c). An all-zero vector normalizes to uniform.
std::vector<double> normalize_confidences(const ConfidenceVector& c);

/// Mean confidence, the total-evidence proxy E.
double total_evidence(const ConfidenceVector& c);

/// Entropy of p divided by log K, clamped to [0, 1]. Zero-probability
/// terms contribute nothing. K = 1 has no competition and returns 0.
/// The log base cancels between numerator and denominator.
double normalized_entropy(std::span<const double> p, std::size_t k);

double epistemic_uncertainty(double evidence);

double aleatoric_uncertainty(double h_norm, double evidence);

Quadrant classify_quadrant(double eu, double au, const UncertaintyThresholds& th);

/// Runs the whole pipeline over one confidence vector. Deterministic:
/// identical inputs produce bit-identical reports.
UncertaintyReport quantify(const ConfidenceVector& c, const UncertaintyThresholds& th);

} // namespace webuq::conactu
