#include "webuq/conactu.hpp"

#include "webuq/errors.hpp"

#include <algorithm>
#include <cmath>

namespace webuq::conactu {

const char* to_string(Quadrant q) {
    switch (q) {
        case Quadrant::StrictPenalty: return "strict_penalty";
        case Quadrant::RelaxedPenalty: return "relaxed_penalty";
        case Quadrant::Normal: return "normal";
        case Quadrant::Regenerate: return "regenerate";
    }
    return "?";
}

Quadrant quadrant_from_string(const std::string& s) {
    if (s == "strict_penalty") return Quadrant::StrictPenalty;
    if (s == "relaxed_penalty") return Quadrant::RelaxedPenalty;
    if (s == "normal") return Quadrant::Normal;
    if (s == "regenerate") return Quadrant::Regenerate;
    throw Error("unknown quadrant: " + s);
}

void to_json(json& j, const UncertaintyThresholds& t) {
    j = json{{"theta_eu", t.theta_eu}, {"theta_au", t.theta_au}};
}

void from_json(const json& j, UncertaintyThresholds& t) {
    t.theta_eu = j.value("theta_eu", 0.5);
    t.theta_au = j.value("theta_au", 0.5);
}

void to_json(json& j, const UncertaintyReport& r) {
    j = json{
        {"p", r.p},
        {"evidence", r.evidence},
        {"entropy", r.entropy},
        {"eu", r.eu},
        {"au", r.au},
        {"quadrant", to_string(r.quadrant)},
    };
}

ConfidenceVector::ConfidenceVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
        throw Error("confidence vector must have at least one entry");
    }
    for (double v : values_) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw Error("confidence out of [0, 1]: " + std::to_string(v));
        }
    }
}

namespace {

bool all_equal(std::span<const double> xs) {
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (xs[i] != xs[0]) return false;
    }
    return true;
}

} // namespace

std::vector<double> normalize_confidences(const ConfidenceVector& c) {
    const auto& v = c.values();
    double sum = 0.0;
    for (double x : v) sum += x;
    std::vector<double> p(v.size());
    if (sum == 0.0) {
        // Zero total evidence: the distribution is undefined, fall back
        // to uniform so the entropy term stays meaningful.
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(v.size()));
        return p;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        p[i] = v[i] / sum;
    }
    return p;
}

double total_evidence(const ConfidenceVector& c) {
    const auto& v = c.values();
    if (all_equal(v)) {
        return v[0]; // exact mean of identical values
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

double normalized_entropy(std::span<const double> p, std::size_t k) {
    if (k <= 1) {
        return 0.0; // a single candidate has no competition
    }
    if (all_equal(p)) {
        return 1.0; // uniform distribution is exactly maximum entropy
    }
    double h = 0.0;
    for (double pi : p) {
        if (pi > 0.0) {
            h -= pi * std::log(pi);
        }
    }
    h /= std::log(static_cast<double>(k));
    return std::clamp(h, 0.0, 1.0);
}

double epistemic_uncertainty(double evidence) {
    return 1.0 - evidence;
}

double aleatoric_uncertainty(double h_norm, double evidence) {
    return h_norm * evidence;
}

Quadrant classify_quadrant(double eu, double au, const UncertaintyThresholds& th) {
    const bool high_eu = eu > th.theta_eu;
    const bool high_au = au > th.theta_au;
    if (high_eu && high_au) return Quadrant::StrictPenalty;
    if (high_eu) return Quadrant::RelaxedPenalty;
    if (high_au) return Quadrant::Normal;
    return Quadrant::Regenerate;
}

UncertaintyReport quantify(const ConfidenceVector& c, const UncertaintyThresholds& th) {
    UncertaintyReport r;
    r.p = normalize_confidences(c);
    r.evidence = total_evidence(c);
    r.entropy = normalized_entropy(r.p, c.size());
    r.eu = epistemic_uncertainty(r.evidence);
    r.au = aleatoric_uncertainty(r.entropy, r.evidence);
    r.quadrant = classify_quadrant(r.eu, r.au, th);
    return r;
}

} // namespace webuq::conactu
