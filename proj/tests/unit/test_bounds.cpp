#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "vpstab/bounds.hpp"
#include "vpstab/error.hpp"

using namespace vpstab;

namespace {
const double kLn9 = std::log(9.0);
}

// Frozen values below come from 30-digit evaluations of the closed forms.
TEST(Bounds, ClosedFormAlphaOne) {
    const auto idx = OrliczIndex::make(1.0);
    EXPECT_NEAR(g_closed(1.0, std::exp(-10.0), 1.0, idx), 3.67879441171442321595523770161, 1e-12);
    EXPECT_NEAR(g_closed(0.0, 1e-5, 2.0, idx), std::log(1e5), 1e-12);
}

TEST(Bounds, HorizonValues) {
    EXPECT_NEAR(t_star(OrliczIndex::make(1.0), std::exp(-10.0), 1.0), 1.51539008481740135842642500114, 1e-12);
    EXPECT_NEAR(t_star(OrliczIndex::infinite(), std::exp(-16.0), 1.0), 5.03539238526497784832618588628, 1e-12);
    EXPECT_THROW(t_star(OrliczIndex::make(1.0), 0.2, 1.0), DomainError);
}

TEST(Bounds, ClosedFormHitsLn9AtHorizon) {
    for (double a : {1.0, 1.5, 3.0}) {
        const auto idx = OrliczIndex::make(a);
        const double ts = t_star(idx, 1e-4, 0.7);
        EXPECT_NEAR(g_closed(ts, 1e-4, 0.7, idx), kLn9, 1e-9);
        EXPECT_THROW(g_closed(ts * 1.01, 1e-4, 0.7, idx), DomainError);
        EXPECT_NEAR(g_closed(ts * 1.01, 1e-4, 0.7, idx, true), kLn9, 1e-12);
    }
}

TEST(Bounds, OdeAgreesWithClosedForm) {
    const auto idx = OrliczIndex::make(2.0);
    // High-precision ODE reference: 12.359619140625.
    EXPECT_NEAR(g_ode(1.0, std::exp(-16.0), 0.5, idx, 1e-3), 12.359619140625, 1e-8);
    EXPECT_NEAR(g_closed(1.0, std::exp(-16.0), 0.5, idx), 12.359619140625, 1e-10);
}

TEST(Bounds, EnvelopeW1) {
    EnvelopeParams p;
    p.idx = OrliczIndex::infinite();
    p.B = 1e-8;
    p.C = 1.0;
    p.c = 1.0;
    p.T = 1.0;
    EXPECT_NEAR(envelope_w1(1.0, p), 0.00527908835625902069235081059648, 1e-15);
    EXPECT_DOUBLE_EQ(envelope_w1(0.0, p), std::sqrt(1e-8));
    p.B = 0.1;
    EXPECT_THROW(envelope_w1(0.5, p), PreconditionError);
}

TEST(Bounds, EnvelopeW1AlphaOneStartsAtB) {
    EnvelopeParams p;
    p.idx = OrliczIndex::make(1.0);
    p.B = 1e-6;
    EXPECT_DOUBLE_EQ(envelope_w1(0.0, p), 1e-6);
    EXPECT_GT(envelope_w1(0.5, p), envelope_w1(0.1, p));
}

TEST(Bounds, EnvelopeX) {
    EnvelopeParams p;
    p.idx = OrliczIndex::make(1.0);
    p.c = 1.0;
    p.T = 1.0;
    EXPECT_NEAR(envelope_x(1.0, p, 1e-6, 0.0), 0.00800693125029977835973855494871, 1e-15);
    EXPECT_THROW(envelope_x(0.5, p, 0.06, 0.0), PreconditionError);
}

TEST(Bounds, Log2LipEnvelopeHypothesis) {
    EnvelopeParams p;
    p.B = 1e-4;
    p.T = 1.0;
    EXPECT_GT(envelope_log2lip(0.5, p), 0.0);
    p.B = 0.06;
    EXPECT_THROW(envelope_log2lip(0.5, p), PreconditionError);
}

TEST(Bounds, HorizonLowerBoundIsClipped) {
    EnvelopeParams p;
    p.B = 1e-12;
    p.T = 2.0;
    EXPECT_LE(t_star_lower(p), 2.0);
    EXPECT_GE(t_star_lower(p, 1e-6), 0.0);
}

TEST(Bounds, LogGrid) {
    const auto v = LogGrid{1.0, 100.0, 2}.values();
    ASSERT_EQ(v.size(), 5u);
    EXPECT_DOUBLE_EQ(v.front(), 1.0);
    EXPECT_NEAR(v.back(), 100.0, 1e-12);
}

TEST(Bounds, FitRecoversAGeneratingRate) {
    const auto idx = OrliczIndex::make(1.0);
    EnvelopeParams p;
    p.idx = idx;
    p.c = 0.5;
    p.T = 1.0;
    std::vector<double> t, X;
    for (int k = 0; k <= 10; ++k) {
        t.push_back(0.1 * k);
        X.push_back(envelope_x(t.back(), p, 1e-6, 0.0));
    }
    const EnvelopeFit f = fit_rate(t, X, 1e-6, 0.0, idx, 1.0);
    ASSERT_TRUE(f.c_found);
    EXPECT_GE(f.c, 0.5 * (1 - 1e-12));
    EXPECT_LE(f.c, 0.5 * std::pow(10.0, 1.0 / 200) * (1 + 1e-12));
}

TEST(Bounds, FitReportsFailure) {
    const std::vector<double> t{0.0, 1.0}, X{1e-6, 0.2};
    EXPECT_FALSE(fit_rate(t, X, 1e-6, 0.0, OrliczIndex::make(1.0), 1.0).c_found);
}
