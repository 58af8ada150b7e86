#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "vpstab/error.hpp"
#include "vpstab/orlicz.hpp"

using namespace vpstab;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST(Orlicz, IndexExponents) {
    const auto one = OrliczIndex::make(1.0);
    EXPECT_DOUBLE_EQ(one.beta, 2.0);
    EXPECT_TRUE(std::isinf(one.gamma_exp));
    const auto two = OrliczIndex::make(2.0);
    EXPECT_DOUBLE_EQ(two.beta, 1.5);
    EXPECT_DOUBLE_EQ(two.gamma_exp, 4.0);
    const auto inf = OrliczIndex::infinite();
    EXPECT_TRUE(inf.is_infinite());
    EXPECT_DOUBLE_EQ(inf.beta, 1.0);
    EXPECT_DOUBLE_EQ(inf.gamma_exp, 2.0);
    EXPECT_THROW(OrliczIndex::make(0.5), PreconditionError);
}

TEST(Orlicz, YoungFunctions) {
    EXPECT_NEAR(phi_alpha(1.0, OrliczIndex::make(1.0)), 1.71828182845904523536, 1e-15);
    EXPECT_NEAR(phi_alpha(1e-10, OrliczIndex::make(1.0)), 1e-10, 1e-20);
    EXPECT_THROW(phi_alpha(1.0, OrliczIndex::infinite()), DomainError);
    EXPECT_NEAR(psi_alpha(1.0 / 9.0, OrliczIndex::make(1.0)), 0.536421760361147545708346277266, 1e-15);
    EXPECT_NEAR(psi_alpha(0.01, OrliczIndex::make(1.0)), 0.212075924419135920422466655544, 1e-15);
    EXPECT_NEAR(psi_alpha(5.0, OrliczIndex::infinite()), 0.244136064148468820310054497094, 1e-15);
    EXPECT_EQ(psi_alpha(0.0, OrliczIndex::make(2.0)), 0.0);
}

TEST(Orlicz, UniformCellClosedForm) {
    // One unit cell of density c: exp(c/λ) - 1 = 1, so λ = c / ln 2.
    const std::vector<double> rho{3.0};
    EXPECT_NEAR(luxemburg_norm(rho, 1.0, OrliczIndex::make(1.0)), 3.0 * 1.442695040888963407359924681, 1e-12);
}

TEST(Orlicz, Homogeneity) {
    std::mt19937_64 rng(2);
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> rho(200);
    for (auto& r : rho) r = ex(rng);
    for (double a : {1.0, 2.0, 3.0}) {
        const auto idx = OrliczIndex::make(a);
        const double n1 = luxemburg_norm(rho, 0.01, idx);
        std::vector<double> scaled = rho;
        for (auto& r : scaled) r *= 7.5;
        EXPECT_NEAR(luxemburg_norm(scaled, 0.01, idx), 7.5 * n1, 1e-9 * 7.5 * n1);
    }
}

TEST(Orlicz, InfiniteIndexIsTheMaximum) {
    const std::vector<double> rho{0.5, 4.0, 1.0};
    EXPECT_EQ(luxemburg_norm(rho, 0.1, OrliczIndex::infinite()), 4.0);
    EXPECT_EQ(luxemburg_norm(std::vector<double>{0.0, 0.0}, 0.1, OrliczIndex::make(1.0)), 0.0);
}

TEST(Orlicz, HistogramConservesMass) {
    PhaseEnsemble e(2, 3);
    e.weights = {0.25, 0.25, 0.5};
    e.positions = {0.05, 0.05, 0.15, 0.05, 5.0, 5.0};
    Box box;
    box.lo = {0.0, 0.0, 0.0};
    box.hi = {0.2, 0.2, 0.0};
    const DensityGrid g = density_histogram(e, 0.1, box);
    EXPECT_EQ(g.cells(), 4u);
    EXPECT_DOUBLE_EQ(g.overflow_mass, 0.5);
    EXPECT_DOUBLE_EQ(g.total_mass(), 1.0);
    EXPECT_DOUBLE_EQ(g.density(0), 25.0);

    const DensityGrid auto_box = density_histogram(e, 0.1);
    EXPECT_EQ(auto_box.overflow_mass, 0.0);
    EXPECT_DOUBLE_EQ(auto_box.total_mass(), 1.0);
}

TEST(Orlicz, SupNormOfConstantDensity) {
    // Σ V c^p = c^p on a unit volume, so the objective is p^{-1/α} c, peaking at p = α.
    const std::vector<double> rho{2.0};
    const auto s = lp_sup_norm(rho, 1.0, OrliczIndex::make(2.0), 50.0);
    EXPECT_NEAR(s.argmax_p, 2.0, 1e-9);
    EXPECT_NEAR(s.value, 2.0 / std::sqrt(2.0), 1e-12);
}

TEST(Orlicz, SupNormAndLuxemburgAreComparable) {
    std::mt19937_64 rng(8);
    std::lognormal_distribution<double> ln(0.0, 1.0);
    std::vector<double> rho(400);
    for (auto& r : rho) r = ln(rng);
    for (double a : {1.0, 2.0}) {
        const auto idx = OrliczIndex::make(a);
        const double ratio = lp_sup_norm(rho, 0.0025, idx, 200.0).value / luxemburg_norm(rho, 0.0025, idx);
        EXPECT_GE(ratio, kOrliczBandLower);
        EXPECT_LE(ratio, kOrliczBandUpper);
    }
}

TEST(Orlicz, ModularRootFinder) {
    const double lam = luxemburg_norm_from_modular([](double l) { return 4.0 / (l * l); }, 100.0);
    EXPECT_NEAR(lam, 2.0, 2e-13);
}
