#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "../support/brute_transport.hpp"
#include "vpstab/error.hpp"
#include "vpstab/transport.hpp"

using namespace vpstab;

namespace {

DiscreteMeasure line(std::vector<double> x, std::vector<double> w) {
    DiscreteMeasure m;
    m.dim = 1;
    m.points = std::move(x);
    m.weights = std::move(w);
    return m;
}

}  // namespace

TEST(Transport, DiracToDirac) {
    const auto p = w1_exact(line({0.0}, {1.0}), line({3.0}, {1.0}));
    EXPECT_DOUBLE_EQ(p.cost, 3.0);
    ASSERT_EQ(p.entries.size(), 1u);
}

TEST(Transport, OneDimensionalMatchesCdfFormula) {
    // W1 on the line is ∫ |F - G|.
    const auto p = w1_exact(line({0.0, 1.0, 2.0}, {0.5, 0.25, 0.25}), line({0.5, 3.0}, {0.75, 0.25}));
    EXPECT_NEAR(p.cost, 0.5 * 0.5 + 0.25 * 0.5 + 0.25 * 1.0, 1e-12);
    EXPECT_LE(plan_marginal_error(p, line({0.0, 1.0, 2.0}, {0.5, 0.25, 0.25}), line({0.5, 3.0}, {0.75, 0.25})),
              1e-12);
}

TEST(Transport, IdenticalMeasuresHaveZeroDistance) {
    const auto m = line({0.1, 0.7, 0.3}, {0.2, 0.5, 0.3});
    EXPECT_EQ(w1_exact(m, m).cost, 0.0);
}

TEST(Transport, MassMismatchAndCap) {
    EXPECT_THROW(w1_exact(line({0.0}, {1.0}), line({1.0}, {2.0})), PreconditionError);
    ExactSolverOptions opts;
    opts.cap = 3;
    EXPECT_THROW(w1_exact(line({0, 1}, {.5, .5}), line({2, 3}, {.5, .5}), opts), SizeError);
}

TEST(Transport, MatchesExhaustiveVertexSearch) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> size(1, 6), unit(1, 9);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const int m = size(rng), n = size(rng);
        std::vector<std::int64_t> a(m), b(n);
        for (auto& v : a) v = unit(rng);
        std::int64_t total = 0;
        for (auto v : a) total += v;
        // split the same total over n columns, each at least one unit
        for (auto& v : b) v = 1;
        for (std::int64_t left = total - n; left > 0; --left) b[rng() % n] += 1;
        if (total < n) continue;
        DiscreteMeasure mu, nu;
        mu.dim = nu.dim = 2;
        for (int i = 0; i < m; ++i) {
            mu.points.push_back(coord(rng));
            mu.points.push_back(coord(rng));
            mu.weights.push_back(static_cast<double>(a[i]) / total);
        }
        for (int j = 0; j < n; ++j) {
            nu.points.push_back(coord(rng));
            nu.points.push_back(coord(rng));
            nu.weights.push_back(static_cast<double>(b[j]) / total);
        }
        std::vector<std::vector<double>> c(m, std::vector<double>(n));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                c[i][j] = std::hypot(mu.points[2 * i] - nu.points[2 * j], mu.points[2 * i + 1] - nu.points[2 * j + 1]);
        const double ref = vpstab::testing::BruteTransport(a, b, c).solve() / total;
        EXPECT_NEAR(w1_exact(mu, nu).cost, ref, 1e-9) << "trial " << trial;
    }
}

TEST(Transport, SinkhornApproachesExact) {
    const auto mu = line({0.0, 1.0}, {0.5, 0.5});
    const auto nu = line({0.5, 2.0}, {0.5, 0.5});
    const double exact = w1_exact(mu, nu).cost;
    // entropic bias is at most reg * ln(n1 n2)
    const auto r = w1_sinkhorn(mu, nu, 0.2, 1000);
    EXPECT_TRUE(r.converged) << r.marginal_violation;
    EXPECT_NEAR(r.cost, exact, 0.2 * std::log(4.0));

    // Small regularization on this tied instance converges only sublinearly;
    // the best iterate comes back flagged.
    const auto slow = w1_sinkhorn(mu, nu, 0.01, 200);
    EXPECT_FALSE(slow.converged);
    EXPECT_EQ(slow.iterations, 200);
    EXPECT_NEAR(slow.cost, exact, 0.01 * std::log(4.0));
}

TEST(Transport, IdentityCouplingBoundsW1) {
    PhaseEnsemble a(2, 3), b(2, 3);
    a.weights = b.weights = {1.0, 1.0, 1.0};
    a.positions = {0, 0, 1, 0, 0, 1};
    b.positions = {0.1, 0, 1, 0.2, 0, 1};
    b.velocities = {0, 0, 0.3, 0, 0, 0};
    const CouplingGap g = identity_coupling_gap(a, b);
    EXPECT_NEAR(g.x_gap, 0.3, 1e-15);
    EXPECT_NEAR(g.v_gap, 0.3, 1e-15);
    EXPECT_LE(w1_exact(phase_measure(a), phase_measure(b)).cost, g.x_gap + g.v_gap + 1e-12);
}

TEST(Transport, InitialBoundOrdering) {
    DiscreteMeasure mu, nu;
    mu.dim = nu.dim = 4;
    mu.points = {0, 0, 0, 0, 1, 1, 0, 0};
    nu.points = {0, 1, 1, 0, 1, 0, 0, 1};
    mu.weights = nu.weights = {0.5, 0.5};
    const auto b = w1_initial_bound(mu, nu);
    EXPECT_LE(b.lower, b.upper + 1e-15);
    EXPECT_LE(b.upper, std::sqrt(2.0) * b.lower + 1e-12);
}

TEST(Transport, MeasureCsvRoundTrip) {
    const auto m = line({0.25, -1.5}, {0.4, 0.6});
    std::stringstream ss;
    write_measure_csv(ss, m, "h");
    const auto back = read_measure_csv(ss);
    EXPECT_EQ(back.dim, 1);
    EXPECT_EQ(back.points, m.points);
    EXPECT_EQ(back.weights, m.weights);
}
