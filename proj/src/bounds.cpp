#include "vpstab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vpstab/error.hpp"

namespace vpstab {

namespace {

const double kLn9 = std::log(9.0);

void require_gap(double A) {
    if (!(A > 0.0) || !(A < 1.0 / 9.0)) throw DomainError("gap parameter must satisfy 0 < A < 1/9");
}

void require_rate(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw PreconditionError("rate constant c must be positive");
}

void require_B(const EnvelopeParams& p) {
    if (!(p.B > 0.0) || !(p.B < 1.0)) throw PreconditionError("initial distance must satisfy 0 < B < 1");
}

bool past_horizon(double t, double ts) { return t > ts * (1.0 + 1e-12); }

}  // namespace

double t_star(const OrliczIndex& idx, double A, double c) {
    require_gap(A);
    require_rate(c);
    const double L = -std::log(A);
    if (idx.is_one()) return std::log(L / kLn9) / c;
    const double g = idx.gamma_exp;
    return g / c * (std::pow(L, 1.0 / g) - std::pow(kLn9, 1.0 / g));
}

double g_closed(double t, double A, double c, const OrliczIndex& idx, bool extrapolate) {
    if (!(t >= 0.0)) throw PreconditionError("time must be nonnegative");
    const double ts = t_star(idx, A, c);
    if (past_horizon(t, ts)) {
        if (!extrapolate) throw DomainError("t = " + std::to_string(t) + " lies beyond the horizon T* = " + std::to_string(ts));
        return kLn9;
    }
    const double L = -std::log(A);
    if (idx.is_one()) return L * std::exp(-c * t);
    const double g = idx.gamma_exp;
    const double base = std::pow(L, 1.0 / g) - c * t / g;
    return std::pow(std::max(base, 0.0), g);
}

double g_ode(double t, double A, double c, const OrliczIndex& idx, double dt, bool extrapolate) {
    if (!(t >= 0.0)) throw PreconditionError("time must be nonnegative");
    if (!(dt > 0.0)) throw PreconditionError("step must be positive");
    const double ts = t_star(idx, A, c);
    double t_end = t;
    if (past_horizon(t, ts)) {
        if (!extrapolate) throw DomainError("t = " + std::to_string(t) + " lies beyond the horizon T* = " + std::to_string(ts));
        t_end = ts;
    }
    const double e = idx.beta / 2.0;
    const auto rhs = [&](double G) { return -c * std::pow(std::max(G, 0.0), e); };
    double G = -std::log(A);
    double s = 0.0;
    while (s < t_end) {
        const double h = std::min(dt, t_end - s);
        const double k1 = rhs(G);
        const double k2 = rhs(G + 0.5 * h * k1);
        const double k3 = rhs(G + 0.5 * h * k2);
        const double k4 = rhs(G + h * k3);
        G += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s = (h == t_end - s) ? t_end : s + h;
    }
    if (t_end < t) return kLn9;
    return G;
}

double t_star_lower(const EnvelopeParams& p, double cprime) {
    require_B(p);
    if (!(cprime > 0.0)) throw PreconditionError("C' must be positive");
    const double L = -std::log(p.B);
    double v;
    if (p.idx.is_one()) {
        v = cprime * std::log(L) - 1.0 / cprime;
    } else {
        v = cprime * p.idx.gamma_exp * std::pow(L, 1.0 / p.idx.gamma_exp) - 1.0 / cprime;
    }
    return std::clamp(v, 0.0, p.T);
}

namespace {

double w1_form(double t, const EnvelopeParams& p) {
    const double L = -std::log(p.B);
    if (p.idx.is_one()) return p.C * std::pow(p.B, std::exp(-p.c * t)) * (1.0 + t * L * L);
    const double g = p.idx.gamma_exp;
    return p.C * std::pow(p.B, 1.0 / g) * std::exp(p.c * std::pow(t, g)) * (1.0 + t * std::pow(L, p.idx.beta));
}

void require_envelope_args(double t, const EnvelopeParams& p) {
    if (!(t >= 0.0)) throw PreconditionError("time must be nonnegative");
    if (!(p.C > 0.0)) throw PreconditionError("prefactor C must be positive");
    require_rate(p.c);
    if (!(t <= t_star_lower(p) * (1.0 + 1e-12))) throw DomainError("t exceeds the horizon lower bound");
}

}  // namespace

double envelope_w1(double t, const EnvelopeParams& p) {
    require_B(p);
    if (!(p.eps > 0.0)) throw PreconditionError("eps must be positive");
    if (!(std::pow(1.0 + p.T, 1.0 + p.eps) * p.B < 1.0 / 18.0))
        throw PreconditionError("hypothesis (1+T)^(1+eps) W1(0) < 1/18 violated");
    require_envelope_args(t, p);
    return w1_form(t, p);
}

double envelope_log2lip(double t, const EnvelopeParams& p) {
    require_B(p);
    if (!((1.0 + p.T) * p.B < 1.0 / 9.0)) throw PreconditionError("hypothesis (1+T) W1(0) < 1/9 violated");
    require_envelope_args(t, p);
    EnvelopeParams q = p;
    q.idx = OrliczIndex::make(1.0);
    return w1_form(t, q);
}

double envelope_x(double t, const EnvelopeParams& p, double X0, double V0) {
    if (!(t >= 0.0)) throw PreconditionError("time must be nonnegative");
    if (!(X0 >= 0.0) || !(V0 >= 0.0)) throw PreconditionError("initial gaps must be nonnegative");
    const double AT = (1.0 + p.T) * (X0 + V0);
    if (!(AT < 1.0 / 9.0)) throw PreconditionError("hypothesis (1+T)(X(0)+V(0)) < 1/9 violated");
    if (!(AT > 0.0)) throw PreconditionError("initial gap must be positive");
    if (past_horizon(t, t_star(p.idx, AT, p.c))) throw DomainError("t exceeds the horizon of the position envelope");
    const double A = (1.0 + t) * (X0 + V0);
    return std::exp(-g_closed(t, A, p.c, p.idx, true));
}

std::vector<double> LogGrid::values() const {
    if (!(lo > 0.0) || !(hi >= lo) || per_decade < 1) throw PreconditionError("invalid log grid");
    std::vector<double> out;
    const double l0 = std::log10(lo);
    const auto n = static_cast<long>(std::floor((std::log10(hi) - l0) * per_decade + 1e-9));
    out.reserve(n + 1);
    for (long k = 0; k <= n; ++k) out.push_back(std::pow(10.0, l0 + static_cast<double>(k) / per_decade));
    return out;
}

EnvelopeFit fit_rate(std::span<const double> times, std::span<const double> X, double X0, double V0,
                     const OrliczIndex& idx, double T, const LogGrid& grid) {
    if (times.size() != X.size()) throw PreconditionError("times and samples differ in length");
    EnvelopeParams p;
    p.idx = idx;
    p.T = T;
    EnvelopeFit fit;
    for (double c : grid.values()) {
        p.c = c;
        bool ok = true;
        try {
            for (std::size_t k = 0; k < times.size() && ok; ++k) ok = dominated(X[k], envelope_x(times[k], p, X0, V0));
        } catch (const DomainError&) {
            // Larger rates only shrink the horizon further.
            break;
        }
        if (ok) {
            fit.c = c;
            fit.c_found = true;
            break;
        }
    }
    return fit;
}

EnvelopeFit fit_envelope(std::span<const double> times, std::span<const double> X, std::span<const double> W1,
                         double X0, double V0, const EnvelopeParams& base, const LogGrid& grid) {
    if (times.size() != W1.size()) throw PreconditionError("times and samples differ in length");
    EnvelopeFit fit = fit_rate(times, X, X0, V0, base.idx, base.T, grid);
    if (!fit.c_found) return fit;
    EnvelopeParams p = base;
    p.c = fit.c;
    // Smallest C is the largest sample ratio; snap it up onto the grid.
    double need = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        p.C = 1.0;
        need = std::max(need, W1[k] / envelope_w1(times[k], p));
    }
    for (double C : grid.values()) {
        if (C >= need) {
            fit.C = C;
            fit.C_found = true;
            break;
        }
    }
    return fit;
}

}  // namespace vpstab
