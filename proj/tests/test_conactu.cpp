#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "webuq/conactu.hpp"
#include "webuq/errors.hpp"

#include <cmath>
#include <random>

using namespace webuq;
using namespace webuq::conactu;

namespace {

constexpr double kTol = 1e-9;

// Straight-line recomputation, independent of the implementation path.
struct OracleReport {
    std::vector<double> p;
    double evidence;
    double entropy;
    double eu;
    double au;
};

OracleReport oracle(const std::vector<double>& c) {
    OracleReport r;
    const auto k = c.size();
    double sum = 0.0;
    for (double x : c) sum += x;
    r.p.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        r.p[i] = sum == 0.0 ? 1.0 / static_cast<double>(k) : c[i] / sum;
    }
    r.evidence = 0.0;
    for (double x : c) r.evidence += x;
    r.evidence /= static_cast<double>(k);
    r.entropy = 0.0;
    if (k > 1) {
        for (double pi : r.p) {
            if (pi > 0.0) r.entropy -= pi * std::log(pi);
        }
        r.entropy /= std::log(static_cast<double>(k));
    }
    r.eu = 1.0 - r.evidence;
    r.au = r.entropy * r.evidence;
    return r;
}

} // namespace

TEST_CASE("confidence vector validation") {
    CHECK_THROWS_AS(ConfidenceVector({}), Error);
    CHECK_THROWS_AS(ConfidenceVector({1.2}), Error);
    CHECK_THROWS_AS(ConfidenceVector({-0.1, 0.5}), Error);
    CHECK_NOTHROW(ConfidenceVector({0.0, 1.0}));
}

TEST_CASE("normalize_confidences") {
    auto p = normalize_confidences(ConfidenceVector({0.8, 0.8, 0.8, 0.8}));
    for (double pi : p) CHECK(pi == doctest::Approx(0.25).epsilon(kTol));

    p = normalize_confidences(ConfidenceVector({0.9, 0.1}));
    CHECK(p[0] == doctest::Approx(0.9).epsilon(kTol));
    CHECK(p[1] == doctest::Approx(0.1).epsilon(kTol));

    // all-zero falls back to uniform
    p = normalize_confidences(ConfidenceVector({0.0, 0.0, 0.0}));
    for (double pi : p) CHECK(pi == doctest::Approx(1.0 / 3).epsilon(kTol));

    double sum = 0.0;
    for (double pi : p) sum += pi;
    CHECK(std::abs(sum - 1.0) < kTol);
}

TEST_CASE("total_evidence") {
    CHECK(total_evidence(ConfidenceVector({0.8, 0.8, 0.8, 0.8})) == 0.8);
    CHECK(total_evidence(ConfidenceVector({1.0})) == 1.0);
    CHECK(total_evidence(ConfidenceVector({0.9, 0.1})) == doctest::Approx(0.5).epsilon(kTol));
}

TEST_CASE("normalized_entropy") {
    // uniform distributions hit exactly 1 for any K >= 2
    for (std::size_t k = 2; k <= 8; ++k) {
        std::vector<double> p(k, 1.0 / static_cast<double>(k));
        CHECK(normalized_entropy(p, k) == 1.0);
    }
    // single candidate has no competition
    std::vector<double> single{1.0};
    CHECK(normalized_entropy(single, 1) == 0.0);

    // frozen oracle value: -(0.9 log 0.9 + 0.1 log 0.1) / log 2
    std::vector<double> skew{0.9, 0.1};
    CHECK(normalized_entropy(skew, 2) ==
          doctest::Approx(0.46899559358928122).epsilon(kTol));

    // zero-probability terms contribute nothing
    std::vector<double> with_zero{1.0, 0.0};
    CHECK(normalized_entropy(with_zero, 2) == 0.0);
}

TEST_CASE("eu and au formulas") {
    CHECK(epistemic_uncertainty(1.0) == 0.0);
    CHECK(epistemic_uncertainty(0.0) == 1.0);
    CHECK(epistemic_uncertainty(0.8) == doctest::Approx(0.2).epsilon(kTol));

    CHECK(aleatoric_uncertainty(1.0, 0.8) == doctest::Approx(0.8).epsilon(kTol));
    CHECK(aleatoric_uncertainty(0.0, 0.9) == 0.0);
    CHECK(aleatoric_uncertainty(0.46899559358928122, 0.5) ==
          doctest::Approx(0.23449779679464061).epsilon(kTol));
}

TEST_CASE("classify_quadrant with strict-greater boundaries") {
    const UncertaintyThresholds th{0.5, 0.5};
    CHECK(classify_quadrant(0.9, 0.9, th) == Quadrant::StrictPenalty);
    CHECK(classify_quadrant(0.9, 0.1, th) == Quadrant::RelaxedPenalty);
    CHECK(classify_quadrant(0.2, 0.8, th) == Quadrant::Normal);
    CHECK(classify_quadrant(0.2, 0.2, th) == Quadrant::Regenerate);
    // boundary counts as low on both axes
    CHECK(classify_quadrant(0.5, 0.5, th) == Quadrant::Regenerate);
}

TEST_CASE("quantify composes the pipeline") {
    const UncertaintyThresholds th{0.5, 0.5};

    auto r = quantify(ConfidenceVector({0.8, 0.8, 0.8, 0.8}), th);
    CHECK(r.evidence == 0.8);
    CHECK(r.entropy == 1.0);
    CHECK(r.eu == doctest::Approx(0.2).epsilon(kTol));
    CHECK(r.au == doctest::Approx(0.8).epsilon(kTol));
    CHECK(r.quadrant == Quadrant::Normal);

    r = quantify(ConfidenceVector({1.0}), th);
    CHECK(r.evidence == 1.0);
    CHECK(r.entropy == 0.0);
    CHECK(r.eu == 0.0);
    CHECK(r.au == 0.0);
    CHECK(r.quadrant == Quadrant::Regenerate);

    // all-zero: maximal epistemic uncertainty with uniform distribution
    r = quantify(ConfidenceVector({0.0, 0.0}), th);
    CHECK(r.eu == 1.0);
    CHECK(r.p[0] == doctest::Approx(0.5).epsilon(kTol));
    CHECK(r.au == 0.0);
}

TEST_CASE("quantify matches the straight-line oracle on random vectors") {
    std::mt19937_64 rng(20240817);
    std::uniform_int_distribution<std::size_t> klen(1, 8);
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    const UncertaintyThresholds th{0.5, 0.5};

    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> c(klen(rng));
        for (auto& x : c) x = conf(rng);
        if (trial % 17 == 0) std::fill(c.begin(), c.end(), 0.0);

        const auto got = quantify(ConfidenceVector(c), th);
        const auto want = oracle(c);
        for (std::size_t i = 0; i < c.size(); ++i) {
            CHECK(std::abs(got.p[i] - want.p[i]) < kTol);
        }
        CHECK(std::abs(got.evidence - want.evidence) < kTol);
        CHECK(std::abs(got.entropy - want.entropy) < kTol);
        CHECK(std::abs(got.eu - want.eu) < kTol);
        CHECK(std::abs(got.au - want.au) < kTol);
    }
}

TEST_CASE("invariants over random inputs") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> klen(1, 8);
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    const UncertaintyThresholds th{0.5, 0.5};

    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> c(klen(rng));
        for (auto& x : c) x = conf(rng);
        const auto r = quantify(ConfidenceVector(c), th);

        CHECK(r.eu >= 0.0);
        CHECK(r.eu <= 1.0);
        CHECK(r.au >= 0.0);
        CHECK(r.au <= 1.0);
        CHECK(r.au <= r.entropy + kTol);
        CHECK(r.au <= r.evidence + kTol);
        CHECK(r.eu == 1.0 - r.evidence);
        CHECK(r.au == r.entropy * r.evidence);
        double sum = 0.0;
        for (double pi : r.p) sum += pi;
        CHECK(std::abs(sum - 1.0) < kTol);
        if (c.size() == 1) CHECK(r.au == 0.0);

        // permutation invariance of EU and AU
        auto shuffled = c;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto rs = quantify(ConfidenceVector(shuffled), th);
        CHECK(rs.eu == doctest::Approx(r.eu).epsilon(kTol));
        CHECK(rs.au == doctest::Approx(r.au).epsilon(kTol));

        // scaling by k in (0, 1] keeps p intact and scales E linearly
        double sumc = 0.0;
        for (double x : c) sumc += x;
        if (sumc > 0.0) {
            const double k = 0.25 + 0.75 * conf(rng);
            auto scaled = c;
            for (auto& x : scaled) x *= k;
            const auto rk = quantify(ConfidenceVector(scaled), th);
            for (std::size_t i = 0; i < c.size(); ++i) {
                CHECK(rk.p[i] == doctest::Approx(r.p[i]).epsilon(1e-12));
            }
            CHECK(rk.evidence == doctest::Approx(k * r.evidence).epsilon(1e-12));
        }
    }
}

TEST_CASE("uniform vector of value v gives (1, 1 - v, v) exactly") {
    for (double v : {0.1, 0.25, 0.6, 0.8, 1.0}) {
        for (std::size_t k : {2u, 3u, 5u, 7u}) {
            const auto r = quantify(ConfidenceVector(std::vector<double>(k, v)),
                                    UncertaintyThresholds{});
            CHECK(r.entropy == 1.0);
            CHECK(r.eu == 1.0 - v);
            CHECK(r.au == v);
        }
    }
}

TEST_CASE("quantify is bit-deterministic") {
    const std::vector<double> c{0.3141592653589793, 0.2718281828459045, 0.577215664901532};
    const UncertaintyThresholds th{0.4, 0.3};
    const auto a = quantify(ConfidenceVector(c), th);
    const auto b = quantify(ConfidenceVector(c), th);
    CHECK(a.p == b.p);
    CHECK(a.evidence == b.evidence);
    CHECK(a.entropy == b.entropy);
    CHECK(a.eu == b.eu);
    CHECK(a.au == b.au);
    CHECK(a.quadrant == b.quadrant);
}
