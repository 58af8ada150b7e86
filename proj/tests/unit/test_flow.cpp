#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "vpstab/error.hpp"
#include "vpstab/flow.hpp"
#include "vpstab/scenario.hpp"

using namespace vpstab;

namespace {

PhaseEnsemble single(double x, double v) {
    PhaseEnsemble e(2, 1);
    e.weights = {1.0};
    e.positions = {x, 0.0};
    e.velocities = {v, 0.0};
    return e;
}

FieldModel harmonic() {
    return FieldModel(2, [](std::span<const double> x, double) { return Point{-x[0], -x[1], 0.0}; });
}

PhaseEnsemble disk(std::size_t n, std::uint64_t seed) {
    InitialSpec spec;
    spec.n = n;
    spec.velocity_spread = 0.2;
    return generate_initial(spec, seed);
}

}  // namespace

TEST(Flow, VerletHarmonicStep) {
    const PhaseEnsemble out = step(single(1.0, 0.0), harmonic(), 0.1);
    EXPECT_DOUBLE_EQ(out.positions[0], 0.995);
    EXPECT_DOUBLE_EQ(out.velocities[0], -0.09975);
    EXPECT_DOUBLE_EQ(out.time, 0.1);
}

TEST(Flow, FreeStreamingIsExact) {
    FlowConfig cfg;
    cfg.dt = 0.125;
    cfg.t_end = 1.0;
    const Trajectory t = integrate(single(0.25, 0.5), FieldModel::free_streaming(2), cfg);
    EXPECT_EQ(t.size(), 9u);
    EXPECT_DOUBLE_EQ(t.final_state().positions[0], 0.75);
}

TEST(Flow, ZeroDurationGivesOneSnapshot) {
    FlowConfig cfg;
    cfg.t_end = 0.0;
    EXPECT_EQ(integrate(single(0, 0), harmonic(), cfg).size(), 1u);
}

TEST(Flow, SnapshotsFollowRecordEvery) {
    FlowConfig cfg;
    cfg.dt = 0.1;
    cfg.t_end = 1.05;
    cfg.record_every = 4;
    const Trajectory t = integrate(single(1, 0), harmonic(), cfg);
    ASSERT_GE(t.size(), 3u);
    EXPECT_DOUBLE_EQ(t.times.front(), 0.0);
    EXPECT_NEAR(t.times.back(), 1.05, 1e-12);
}

TEST(Flow, Rk4IsFourthOrder) {
    FlowConfig cfg;
    cfg.integrator = Integrator::RK4;
    cfg.t_end = 1.0;
    double err[2];
    for (int k = 0; k < 2; ++k) {
        cfg.dt = 0.1 / (1 << k);
        const Trajectory t = integrate(single(1.0, 0.0), harmonic(), cfg);
        err[k] = std::abs(t.final_state().positions[0] - std::cos(1.0));
    }
    EXPECT_NEAR(err[0] / err[1], 16.0, 16.0 * 0.2);
}

TEST(Flow, MassAndMomentumConserved) {
    const PhaseEnsemble e = disk(400, 5);
    FlowConfig cfg;
    cfg.dt = 0.01;
    cfg.t_end = 0.5;
    const Trajectory t = integrate(e, FieldModel(KernelSpec::newton(2, 1, 0.02)), cfg);
    const Point p0 = e.momentum();
    for (const auto& s : t.states) {
        EXPECT_EQ(s.total_mass(), e.total_mass());
        const Point p = s.momentum();
        for (int k = 0; k < 2; ++k) EXPECT_LE(std::abs(p[k] - p0[k]), 1e-10 * e.momentum_scale());
    }
}

TEST(Flow, VerletIsReversible) {
    const PhaseEnsemble e = disk(200, 9);
    const FieldModel m(KernelSpec::newton(2, 1, 0.05));
    PhaseEnsemble s = e;
    for (int i = 0; i < 50; ++i) s = step(s, m, 0.01);
    for (double& v : s.velocities) v = -v;
    for (int i = 0; i < 50; ++i) s = step(s, m, 0.01);
    double worst = 0.0;
    for (std::size_t i = 0; i < e.positions.size(); ++i) worst = std::max(worst, std::abs(s.positions[i] - e.positions[i]));
    EXPECT_LE(worst, 1e-6);
}

TEST(Flow, BlowupNamesParticleAndTime) {
    const FieldModel bad(2, [](std::span<const double> x, double) {
        return Point{x[0] > 0.5 ? NAN : 0.0, 0.0, 0.0};
    });
    PhaseEnsemble e(2, 2);
    e.weights = {1.0, 1.0};
    e.positions = {0.0, 0.0, 1.0, 0.0};
    try {
        step(e, bad, 0.1);
        FAIL() << "expected a blowup";
    } catch (const NumericalBlowup& b) {
        EXPECT_EQ(b.particle(), 1u);
        EXPECT_GE(b.time(), 0.0);
    }
}

TEST(Flow, TwinRequiresEqualMass) {
    PhaseEnsemble a = single(0, 0), b = single(0, 0);
    b.weights[0] = 2.0;
    FlowConfig cfg;
    EXPECT_THROW(integrate_twin(a, b, harmonic(), cfg), PreconditionError);
}

TEST(Flow, TrajectoryCsvHeader) {
    FlowConfig cfg;
    std::ostringstream os;
    write_trajectory_csv(os, integrate(single(1, 2), harmonic(), cfg), "abc");
    const std::string s = os.str();
    EXPECT_NE(s.find("config_hash=abc"), std::string::npos);
    EXPECT_NE(s.find("t,i,w,x1,x2,v1,v2\n"), std::string::npos);
}

TEST(Flow, RejectsBadConfig) {
    FlowConfig cfg;
    cfg.dt = 0.0;
    EXPECT_THROW(cfg.validate(), PreconditionError);
    cfg.dt = 0.1;
    cfg.record_every = 0;
    EXPECT_THROW(cfg.validate(), PreconditionError);
}
