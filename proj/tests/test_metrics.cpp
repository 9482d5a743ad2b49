#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "ferret/metrics.hpp"
#include "ferret/rng.hpp"
#include "ferret_reference/metrics_reference.hpp"

using namespace ferret;
using metrics::ScoredBatch;

TEST_CASE("accuracy hand cases") {
    CHECK(metrics::accuracy({{0.9, 0.1}, {1, 0}}) == 1.0);
    CHECK(metrics::accuracy({{0.9, 0.1}, {0, 1}}) == 0.0);
    // (0.6 -> 1 vs 1 ok), (0.4 -> 0 vs 1 wrong), (0.5 -> 1 vs 0 wrong)
    CHECK(metrics::accuracy({{0.6, 0.4, 0.5}, {1, 1, 0}}) == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS(metrics::accuracy({{}, {}}));
    CHECK_THROWS(metrics::accuracy({{0.5}, {2}}));
}

TEST_CASE("accuracy is permutation invariant") {
    Rng rng(1);
    ScoredBatch b;
    for (int i = 0; i < 50; ++i) {
        b.scores.push_back(rng.uniform());
        b.labels.push_back(rng.bernoulli(0.4));
    }
    const double base = metrics::accuracy(b);
    std::vector<std::size_t> perm(b.scores.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm);
    ScoredBatch p;
    for (std::size_t i : perm) {
        p.scores.push_back(b.scores[i]);
        p.labels.push_back(b.labels[i]);
    }
    CHECK(metrics::accuracy(p) == base);
}

TEST_CASE("average precision hand cases") {
    // perfect ranking
    CHECK(metrics::average_precision({{0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}}) == 1.0);
    // (0.9,1) hit at rank 1: prec 1; (0.3,1) hit at rank 3: prec 2/3
    CHECK(metrics::average_precision({{0.9, 0.8, 0.3}, {1, 0, 1}}) ==
          doctest::Approx(0.5 * (1.0 + 2.0 / 3.0)).epsilon(1e-12));
    CHECK(metrics::average_precision({{0.9, 0.8, 0.3}, {1, 0, 1}}) ==
          doctest::Approx(0.8333333).epsilon(1e-6));
    // single positive sample
    CHECK(metrics::average_precision({{0.05}, {1}}) == 1.0);
    // no positives is an error
    CHECK_THROWS(metrics::average_precision({{0.5, 0.4}, {0, 0}}));
}

TEST_CASE("average precision is invariant under monotone score transforms") {
    Rng rng(2);
    ScoredBatch b;
    for (int i = 0; i < 64; ++i) {
        b.scores.push_back(rng.uniform());
        b.labels.push_back(rng.bernoulli(0.3));
    }
    if (std::count(b.labels.begin(), b.labels.end(), 1) == 0) b.labels[0] = 1;
    const double base = metrics::average_precision(b);
    ScoredBatch t = b;
    for (auto& s : t.scores) s = 1.0 / (1.0 + std::exp(-(4.0 * s - 1.0)));  // strictly increasing
    CHECK(metrics::average_precision(t) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("average precision matches the rank-enumeration oracle") {
    Rng rng(3);
    for (int iter = 0; iter < 300; ++iter) {
        const int n = 1 + static_cast<int>(rng.uniform_int(64));
        ScoredBatch b;
        for (int i = 0; i < n; ++i) {
            // quantized scores force ties through the index tiebreak
            b.scores.push_back(rng.uniform_int(8) / 8.0);
            b.labels.push_back(rng.bernoulli(0.5));
        }
        if (std::count(b.labels.begin(), b.labels.end(), 1) == 0)
            b.labels[static_cast<std::size_t>(rng.uniform_int(n))] = 1;
        CHECK(metrics::average_precision(b) ==
              doctest::Approx(reference::average_precision(b)).epsilon(1e-12));
    }
}
