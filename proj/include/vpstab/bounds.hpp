#pragma once

#include <span>
#include <vector>

#include "vpstab/orlicz.hpp"

namespace vpstab {

/// Inputs of the stability envelopes. `C` is the prefactor, `c` the rate
/// inside the exponents and `cprime` the constant of the horizon lower bound.
struct EnvelopeParams {
    OrliczIndex idx;
    double A = 1e-3;  ///< (1+T)(X0+V0) or (1+T) B
    double B = 1e-3;  ///< initial W1 distance
    double c = 1.0;
    double C = 1.0;
    double eps = 0.1;
    double T = 1.0;
    double cprime = 1.0;
};

/// Closed-form G_α(t; A, c): |ln A| e^{-ct} for α = 1, otherwise
/// (|ln A|^{1/γ} - c t / γ)^γ. Past t_star a DomainError is raised unless
/// `extrapolate` is set, in which case the value is held at ln 9.
double g_closed(double t, double A, double c, const OrliczIndex& idx, bool extrapolate = false);

/// RK4 solution of G' = -c G^{β/2}, G(0) = ln(1/A), with step `dt` (the last
/// step is shortened to land on t).
double g_ode(double t, double A, double c, const OrliczIndex& idx, double dt, bool extrapolate = false);

/// Time at which G reaches ln 9. Requires A ∈ (0, 1/9).
double t_star(const OrliczIndex& idx, double A, double c);

/// Lower bound for the horizon in terms of B, clipped to [0, T].
double t_star_lower(const EnvelopeParams& p, double cprime);
inline double t_star_lower(const EnvelopeParams& p) { return t_star_lower(p, p.cprime); }

/// W1 envelope: C B^{e^{-ct}} (1 + t|ln B|^2) for α = 1 and
/// C B^{1/γ} e^{c t^γ} (1 + t|ln B|^{1+1/α}) otherwise (α = ∞ gives γ = 2).
double envelope_w1(double t, const EnvelopeParams& p);

/// Envelope for bounded log^2-Lipschitz kernels: the α = 1 form under the
/// weaker hypothesis (1+T) B < 1/9.
double envelope_log2lip(double t, const EnvelopeParams& p);

/// Bound exp(-G(t; (1+t)(X0+V0), c)) on the position gap.
double envelope_x(double t, const EnvelopeParams& p, double X0, double V0);

/// Relative slack when comparing a sample against an envelope; at t = 0 the
/// position envelope reproduces X(0)+V(0) only up to rounding.
inline constexpr double kEnvelopeSlack = 1e-12;

/// True when `sample` lies under `envelope` up to kEnvelopeSlack.
inline bool dominated(double sample, double envelope) { return sample <= envelope * (1.0 + kEnvelopeSlack); }

/// Log-spaced candidate values lo·10^{k/per_decade} up to hi.
struct LogGrid {
    double lo = 1e-4;
    double hi = 1e4;
    int per_decade = 200;
    std::vector<double> values() const;
};

struct EnvelopeFit {
    double c = 0.0;
    double C = 0.0;
    bool c_found = false;
    bool C_found = false;
};

/// Smallest grid rate c for which envelope_x dominates every sample X_k
/// at times t_k, with every t_k inside the horizon of (1+T)(X0+V0).
EnvelopeFit fit_rate(std::span<const double> times, std::span<const double> X, double X0, double V0,
                     const OrliczIndex& idx, double T, const LogGrid& grid = {});

/// fit_rate followed by the smallest grid prefactor C for which envelope_w1
/// (with that c and B = W1_0) dominates every W1 sample.
EnvelopeFit fit_envelope(std::span<const double> times, std::span<const double> X, std::span<const double> W1,
                         double X0, double V0, const EnvelopeParams& base, const LogGrid& grid = {});

}  // namespace vpstab
