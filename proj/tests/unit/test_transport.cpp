#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fedsciml/rng.hpp"
#include "fedsciml/wasserstein.hpp"

using namespace fedsciml;
using ot::DiscreteDistribution;

namespace {

// Exact oracle for tiny instances: recursively enumerates all saturation
// orders (ship min(a_i, b_j) on some pair, remove whichever side empties).
// Every vertex of the transport polytope is reachable this way, and the
// optimum is attained at a vertex, so the minimum over all orders is exact.
double brute_force_emd(std::vector<double> a, std::vector<double> b,
                       const std::vector<double>& cost, std::size_t n2) {
    constexpr double kEps = 1e-15;
    bool any = false;
    double best = 1e300;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] <= kEps)
            continue;
        for (std::size_t j = 0; j < n2; ++j) {
            if (b[j] <= kEps)
                continue;
            any = true;
            const double move = std::min(a[i], b[j]);
            auto a2 = a;
            auto b2 = b;
            a2[i] -= move;
            b2[j] -= move;
            if (a2[i] < kEps)
                a2[i] = 0.0;
            if (b2[j] < kEps)
                b2[j] = 0.0;
            const double sub = brute_force_emd(std::move(a2), std::move(b2), cost, n2);
            best = std::min(best, move * cost[i * n2 + j] + sub);
        }
    }
    return any ? best : 0.0;
}

DiscreteDistribution random_dist(CounterRng& rng, std::size_t n, std::size_t dim) {
    DiscreteDistribution d;
    d.support.dim = dim;
    std::vector<double> w(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < dim; ++k)
            d.support.push_back(rng.uniform(-2.0, 2.0));
        w[i] = 0.05 + rng.uniform01();
        sum += w[i];
    }
    for (std::size_t i = 0; i + 1 < n; ++i)
        w[i] /= sum;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        acc += w[i];
    w[n - 1] = 1.0 - acc; // exact unit sum
    d.weights = std::move(w);
    return d;
}

} // namespace

TEST_CASE("cost matrix basics") {
    DiscreteDistribution mu, nu;
    mu.support.dim = 1;
    mu.support.push_back(0.0);
    mu.weights = {1.0};
    nu.support.dim = 1;
    nu.support.push_back(3.0);
    nu.weights = {1.0};
    auto m = ot::cost_matrix(mu, nu);
    CHECK(m.size() == 1);
    CHECK(m[0] == 3.0);

    DiscreteDistribution a, b;
    a.support.dim = 2;
    a.support.push_back(0.0, 0.0);
    a.weights = {1.0};
    b.support.dim = 2;
    b.support.push_back(3.0, 4.0);
    b.weights = {1.0};
    CHECK(ot::cost_matrix(a, b)[0] == 5.0); // 3-4-5 triangle

    auto same = ot::cost_matrix(a, a);
    CHECK(same[0] == 0.0);

    CHECK_THROWS_AS((void)ot::cost_matrix(mu, a), UsageError);
}

TEST_CASE("emd basics") {
    DiscreteDistribution mu, nu;
    mu.support.dim = 1;
    mu.support.push_back(0.0);
    mu.weights = {1.0};
    nu.support.dim = 1;
    nu.support.push_back(1.0);
    nu.weights = {1.0};
    CHECK(ot::emd_w1(mu, nu).w1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ot::emd_w1(mu, mu).w1 == 0.0);

    // mu = {0: 1/2, 1: 1/2}, nu = {0.5: 1} -> 0.5
    DiscreteDistribution m2, n2;
    m2.support.dim = 1;
    m2.support.push_back(0.0);
    m2.support.push_back(1.0);
    m2.weights = {0.5, 0.5};
    n2.support.dim = 1;
    n2.support.push_back(0.5);
    n2.weights = {1.0};
    auto res = ot::emd_w1(m2, n2);
    CHECK(res.w1 == doctest::Approx(0.5).epsilon(1e-12));

    // plan marginals
    CHECK(res.plan.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(res.plan.at(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("emd matches brute-force enumeration on tiny instances") {
    CounterRng rng(42, substream("emd-brute"));
    for (int trial = 0; trial < 120; ++trial) {
        const std::size_t n1 = 1 + rng.below(4), n2 = 1 + rng.below(4);
        const std::size_t dim = 1 + rng.below(2);
        auto mu = random_dist(rng, n1, dim);
        auto nu = random_dist(rng, n2, dim);
        const auto cost = ot::cost_matrix(mu, nu);
        const double solver = ot::emd_w1(mu, nu).w1;
        const double brute = brute_force_emd(mu.weights, nu.weights, cost, n2);
        CHECK(std::fabs(solver - brute) < 1e-9);
    }
}

TEST_CASE("emd matches the 1D quantile closed form") {
    CounterRng rng(43, substream("emd-1d"));
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n1 = 2 + rng.below(30), n2 = 2 + rng.below(30);
        auto mu = random_dist(rng, n1, 1);
        auto nu = random_dist(rng, n2, 1);
        const double a = ot::emd_w1(mu, nu).w1;
        const double b = ot::w1_1d_closed_form(mu, nu);
        CHECK(std::fabs(a - b) < 1e-9);
    }

    // quantile shift: {0,1} vs {1,2} uniform -> 1
    DiscreteDistribution mu, nu;
    mu.support.dim = 1;
    mu.support.push_back(0.0);
    mu.support.push_back(1.0);
    mu.weights = {0.5, 0.5};
    nu.support.dim = 1;
    nu.support.push_back(1.0);
    nu.support.push_back(2.0);
    nu.weights = {0.5, 0.5};
    CHECK(ot::w1_1d_closed_form(mu, nu) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ot::w1_1d_closed_form(mu, mu) == 0.0);

    DiscreteDistribution two_d;
    two_d.support.dim = 2;
    two_d.support.push_back(0.0, 0.0);
    two_d.weights = {1.0};
    CHECK_THROWS_AS((void)ot::w1_1d_closed_form(two_d, two_d), UsageError);
}

TEST_CASE("metric axioms on small random instances") {
    CounterRng rng(44, substream("emd-metric"));
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t dim = 1 + rng.below(2);
        auto a = random_dist(rng, 2 + rng.below(5), dim);
        auto b = random_dist(rng, 2 + rng.below(5), dim);
        auto c = random_dist(rng, 2 + rng.below(5), dim);
        const double ab = ot::emd_w1(a, b).w1;
        const double ba = ot::emd_w1(b, a).w1;
        const double ac = ot::emd_w1(a, c).w1;
        const double cb = ot::emd_w1(c, b).w1;
        CHECK(std::fabs(ab - ba) < 1e-10);          // symmetry
        CHECK(ot::emd_w1(a, a).w1 < 1e-12);         // identity
        CHECK(ab <= ac + cb + 1e-9);                // triangle inequality
    }
}

TEST_CASE("translation covariance") {
    CounterRng rng(45, substream("emd-shift"));
    auto a = random_dist(rng, 5, 2);
    auto b = random_dist(rng, 4, 2);
    const double base = ot::emd_w1(a, b).w1;
    DiscreteDistribution a2 = a, b2 = b;
    for (std::size_t i = 0; i < a2.support.values.size(); i += 2) {
        a2.support.values[i] += 1.75;
        a2.support.values[i + 1] -= 0.5;
    }
    for (std::size_t i = 0; i < b2.support.values.size(); i += 2) {
        b2.support.values[i] += 1.75;
        b2.support.values[i + 1] -= 0.5;
    }
    CHECK(std::fabs(ot::emd_w1(a2, b2).w1 - base) < 1e-12);
}

TEST_CASE("transport plan satisfies marginals") {
    CounterRng rng(46, substream("emd-marg"));
    auto mu = random_dist(rng, 6, 2);
    auto nu = random_dist(rng, 5, 2);
    auto res = ot::emd_w1(mu, nu);
    for (std::size_t i = 0; i < res.plan.rows; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < res.plan.cols; ++j) {
            CHECK(res.plan.at(i, j) >= 0.0);
            row += res.plan.at(i, j);
        }
        CHECK(std::fabs(row - mu.weights[i]) < 1e-9);
    }
    for (std::size_t j = 0; j < res.plan.cols; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < res.plan.rows; ++i)
            col += res.plan.at(i, j);
        CHECK(std::fabs(col - nu.weights[j]) < 1e-9);
    }
}

TEST_CASE("mean pairwise W1") {
    DiscreteDistribution d;
    d.support.dim = 1;
    d.support.push_back(0.0);
    d.weights = {1.0};
    std::vector<DiscreteDistribution> same{d, d, d};
    CHECK(ot::mean_pairwise_w1(same) == 0.0);

    // K=3 with pairwise distances (1,1,1): 3 / ((K-2)(K-1)) = 1.5
    DiscreteDistribution a = d, b = d, c = d;
    // equilateral triangle, side 1
    b.support.values[0] = 1.0;
    c.support = data::PointSet(2);
    a.support = data::PointSet(2);
    DiscreteDistribution p1, p2, p3;
    p1.support.dim = 2;
    p1.support.push_back(0.0, 0.0);
    p1.weights = {1.0};
    p2.support.dim = 2;
    p2.support.push_back(1.0, 0.0);
    p2.weights = {1.0};
    p3.support.dim = 2;
    p3.support.push_back(0.5, std::sqrt(3.0) / 2.0);
    p3.weights = {1.0};
    std::vector<DiscreteDistribution> tri{p1, p2, p3};
    CHECK(ot::mean_pairwise_w1(tri) == doctest::Approx(1.5).epsilon(1e-12));

    // K=2 falls back to the plain pairwise distance
    std::vector<DiscreteDistribution> pair{p1, p2};
    CHECK(ot::mean_pairwise_w1(pair) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<DiscreteDistribution> one{p1};
    CHECK_THROWS_AS((void)ot::mean_pairwise_w1(one), UsageError);
}

TEST_CASE("subsample caps the support deterministically") {
    CounterRng rng_data(47, substream("sub"));
    auto d = random_dist(rng_data, 40, 2);
    CounterRng r1(1, 2), r2(1, 2);
    auto s1 = d.subsample(16, r1);
    auto s2 = d.subsample(16, r2);
    CHECK(s1.support.size() == 16);
    CHECK(s1.support.values == s2.support.values);
    auto untouched = d.subsample(100, r1);
    CHECK(untouched.support.size() == 40);
}

TEST_CASE("invalid distributions are rejected") {
    DiscreteDistribution d;
    d.support.dim = 1;
    d.support.push_back(0.0);
    d.weights = {0.7};
    CHECK_THROWS_AS(d.validate(), UsageError);
    d.weights = {-0.2};
    CHECK_THROWS_AS(d.validate(), UsageError);
    DiscreteDistribution empty;
    CHECK_THROWS_AS(empty.validate(), UsageError);
}
