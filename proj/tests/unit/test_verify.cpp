#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "vpstab/error.hpp"
#include "vpstab/scenario.hpp"
#include "vpstab/verify.hpp"

using namespace vpstab;

TEST(Verify, SlopeFit) {
    const auto [s, hw] = fit_slope({0, 1, 2, 3}, {1, 3, 5, 7});
    EXPECT_NEAR(s, 2.0, 1e-14);
    EXPECT_NEAR(hw, 0.0, 1e-12);
}

TEST(Verify, TestDensityMasses) {
    EXPECT_NEAR(TestDensity::uniform_ball(2, 1.5).mass(), 1.5, 1e-14);
    EXPECT_NEAR(TestDensity::uniform_ball(3).mass(), 1.0, 1e-14);
    EXPECT_NEAR(TestDensity::borderline(2, 1.0).mass(), 0.937095604274624687433002647469, 1e-12);
    EXPECT_NEAR(TestDensity::borderline(2, 2.0).mass(), 0.842667528757821906214872006752, 1e-12);
    EXPECT_NEAR(TestDensity::borderline(3, 1.0).mass(), 0.537463940250033312775817226555, 1e-12);
    for (const auto& g : {TestDensity::borderline(2, 1.0), TestDensity::gaussian_like(3), TestDensity::uniform_ball(2)})
        EXPECT_NEAR(g.mass_quadrature(), g.mass(), 1e-8 * g.mass()) << g.name();
}

TEST(Verify, TestDensityOrliczNorms) {
    // Uniform ball of mass 1 and radius 1/2 in 2-D: density 4/π on area π/4,
    // so (π/4)(exp(ρ/λ) - 1) = 1 gives λ = ρ / ln(1 + 4/π).
    const auto g = TestDensity::uniform_ball(2);
    const double rho = 4.0 / std::numbers::pi;
    EXPECT_NEAR(g.orlicz_norm(OrliczIndex::make(1.0)), rho / std::log(1.0 + 4.0 / std::numbers::pi), 1e-11);
    EXPECT_NEAR(g.orlicz_norm(OrliczIndex::infinite()), rho, 1e-14);
    // Matched borderline profile has a finite norm; a stronger index diverges.
    EXPECT_TRUE(std::isfinite(TestDensity::borderline(2, 1.0).orlicz_norm(OrliczIndex::make(1.0))));
    EXPECT_TRUE(std::isinf(TestDensity::borderline(2, 1.0).orlicz_norm(OrliczIndex::make(2.0))));
}

// Reference values: independent polar quadrature about x (scipy dblquad).
TEST(Verify, KernelLemmaLhsMatchesOracle) {
    const auto idx = OrliczIndex::make(1.0);
    const struct {
        TestDensity g;
        double R, expected;
    } cases[] = {
        {TestDensity::uniform_ball(2), 1e-2, 0.4238653892738213},
        {TestDensity::uniform_ball(2), 1e-3, 0.06080721967633381},
        {TestDensity::borderline(2, 1.0), 1e-2, 1.1126639775266742},
        {TestDensity::borderline(2, 1.0), 1e-3, 0.21460472760534566},
    };
    for (const auto& c : cases) {
        const double x[2] = {c.R / 2, 0.0}, y[2] = {-c.R / 2, 0.0};
        const auto v = kernel_lemma_lhs(c.g, x, y, idx, 1e-10);
        EXPECT_NEAR(v.lhs, c.expected, 1e-8 * c.expected) << c.g.name() << " R=" << c.R;
        EXPECT_NEAR(v.inner + v.middle + v.outer, v.lhs, 1e-12 * v.lhs);
    }
}

TEST(Verify, KernelLemmaRatioIsDirectionFree) {
    const auto g = TestDensity::uniform_ball(2);
    const auto idx = OrliczIndex::make(1.0);
    const double R = 1e-3;
    const double x1[2] = {R / 2, 0}, y1[2] = {-R / 2, 0};
    const double s = R / 2 / std::sqrt(2.0);
    const double x2[2] = {s, s}, y2[2] = {-s, -s};
    EXPECT_NEAR(kernel_lemma_ratio(g, x1, y1, idx), kernel_lemma_ratio(g, x2, y2, idx), 1e-6);
}

TEST(Verify, SmallKernelSweepPasses) {
    KernelLemmaConfig cfg;
    cfg.separations = 4;
    cfg.directions = 2;
    const auto r = kernel_lemma_check(TestDensity::borderline(2, 1.0), OrliczIndex::make(1.0), cfg);
    EXPECT_EQ(r.instances, 8u);
    EXPECT_TRUE(r.pass) << "slope " << r.slope;
    EXPECT_GE(r.fitted_constant, r.worst_ratio);
}

TEST(Verify, MomentValue) {
    PhaseEnsemble e(2, 1);
    e.weights = {1.0};
    e.velocities = {1.0, 0.0};
    EXPECT_NEAR(moment_M(e, 0.5, OrliczIndex::make(1.0)), 7.38905609893065022723042746058, 1e-13);
    e.velocities = {1e6, 0.0};
    EXPECT_THROW(moment_M(e, 1.0, OrliczIndex::make(3.0)), RangeError);
}

TEST(Verify, FreeStreamingMomentIsConstant) {
    InitialSpec spec;
    spec.generator = Generator::GaussianVelocity;
    spec.n = 300;
    spec.velocity_spread = 0.5;
    FlowConfig cfg;
    cfg.dt = 0.05;
    cfg.t_end = 1.0;
    const auto traj = integrate(generate_initial(spec, 2), FieldModel::free_streaming(2), cfg);
    const MomentSeries s = moment_series(traj, 0.1, OrliczIndex::make(1.0));
    for (std::size_t k = 0; k < s.dMdt.size(); ++k) EXPECT_LE(std::abs(s.dMdt[k]), 1e-8 * s.M[k + 1]);
    EXPECT_TRUE(moment_inequality_check(traj, 0.1, OrliczIndex::make(1.0)).pass);
}

TEST(Verify, InterpolationConstantIsFinite) {
    InitialSpec spec;
    spec.n = 500;
    spec.velocity_spread = 0.3;
    const auto r = exp_moment_orlicz_check(generate_initial(spec, 4), 0.1, OrliczIndex::make(1.0), 0.2);
    EXPECT_TRUE(r.pass);
    EXPECT_GT(r.fitted_constant, 0.0);
}

TEST(Verify, StaticDensityHasFlatNorm) {
    InitialSpec spec;
    spec.n = 500;
    FlowConfig cfg;
    cfg.t_end = 0.5;
    cfg.dt = 0.1;
    const auto traj = integrate(generate_initial(spec, 4), FieldModel::free_streaming(2), cfg);
    const auto r = proposition_rho_bound(traj, OrliczIndex::make(1.0), 0.2);
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.slope, 0.0, 1e-12);
}

TEST(Verify, SineKernelIsLog2Lipschitz) {
    EXPECT_TRUE(log2lip_check(sin_test_kernel(2)).pass);
    EXPECT_TRUE(log2lip_check(sin_test_kernel(3)).pass);
}

TEST(Verify, ReportJsonFields) {
    LemmaReport r;
    r.lemma = "x";
    r.pass = true;
    r.worst_ratio = std::numeric_limits<double>::infinity();
    r.metrics = {{"m", 1.5}};
    const auto j = nlohmann::json::parse(report_json(r, "cafe"));
    EXPECT_EQ(j["lemma"], "x");
    EXPECT_EQ(j["pass"], true);
    EXPECT_EQ(j["config_hash"], "cafe");
    EXPECT_TRUE(j["worst_ratio"].is_string());
    EXPECT_EQ(r.metric("m"), 1.5);
}
