#include "vpstab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include "json.hpp"

#include "quadrature.hpp"
#include "vpstab/csv.hpp"
#include "vpstab/error.hpp"
#include "vpstab/version.hpp"

namespace vpstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

template <class F>
double gk(F&& f, double a, double b, double tol, int max_intervals = 400) {
    return detail::adaptive_gk(f, a, b, tol, 0.0, max_intervals).value;
}

double unit_ball_volume(int d) { return d == 2 ? kPi : 4.0 * kPi / 3.0; }
double unit_sphere_area(int d) { return d * unit_ball_volume(d); }

void require_dim(int d) {
    if (d != 2 && d != 3) throw PreconditionError("dimension must be 2 or 3");
}

}  // namespace

// ---------------------------------------------------------------------------
// Reports

double LemmaReport::metric(std::string_view name) const {
    for (const auto& [k, v] : metrics) {
        if (k == name) return v;
    }
    throw PreconditionError("report has no metric named " + std::string(name));
}

std::string report_json(const LemmaReport& r, std::string_view config_hash) {
    // Non-finite numbers have no JSON literal; they are written as strings.
    const auto num = [](double v) -> nlohmann::ordered_json {
        if (std::isfinite(v)) return v;
        if (std::isnan(v)) return "nan";
        return v > 0 ? "inf" : "-inf";
    };
    nlohmann::ordered_json j;
    j["version"] = std::string(kVersion);
    if (!config_hash.empty()) j["config_hash"] = std::string(config_hash);
    j["lemma"] = r.lemma;
    j["instances"] = r.instances;
    j["worst_ratio"] = num(r.worst_ratio);
    j["fitted_constant"] = num(r.fitted_constant);
    j["slope"] = num(r.slope);
    j["slope_halfwidth"] = num(r.slope_halfwidth);
    j["pass"] = r.pass;
    auto& th = j["thresholds"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.thresholds) th[k] = num(v);
    auto& me = j["metrics"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.metrics) me[k] = num(v);
    auto& se = j["series"] = nlohmann::ordered_json::array();
    for (double v : r.series) se.push_back(num(v));
    if (!r.note.empty()) j["note"] = r.note;
    return j.dump(2);
}

void write_report_json(std::ostream& os, const LemmaReport& r, std::string_view config_hash) {
    os << report_json(r, config_hash) << '\n';
}

std::pair<double, double> fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw PreconditionError("slope fit needs at least two paired samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw PreconditionError("slope fit needs distinct abscissae");
    const double slope = sxy / sxx;
    if (n < 3) return {slope, 0.0};
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double res = y[i] - my - slope * (x[i] - mx);
        rss += res * res;
    }
    const double se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    return {slope, 2.0 * se};
}

// ---------------------------------------------------------------------------
// Test densities

TestDensity TestDensity::uniform_ball(int dim, double mass, double radius, Point centre) {
    require_dim(dim);
    if (!(mass > 0.0) || !(radius > 0.0)) throw PreconditionError("uniform ball needs positive mass and radius");
    TestDensity g;
    g.kind = DensityKind::UniformBall;
    g.dim = dim;
    g.centre = centre;
    g.radius = radius;
    g.scale = mass / (unit_ball_volume(dim) * std::pow(radius, dim));
    return g;
}

TestDensity TestDensity::gaussian_like(int dim, double mass, double sigma, Point centre) {
    require_dim(dim);
    if (!(mass > 0.0) || !(sigma > 0.0)) throw PreconditionError("Gaussian density needs positive mass and width");
    TestDensity g;
    g.kind = DensityKind::GaussianLike;
    g.dim = dim;
    g.centre = centre;
    g.radius = sigma;
    g.scale = mass / std::pow(2.0 * kPi * sigma * sigma, dim / 2.0);
    return g;
}

TestDensity TestDensity::borderline(int dim, double alpha, double r0, Point centre) {
    require_dim(dim);
    if (!(alpha >= 1.0)) throw PreconditionError("borderline exponent must be >= 1");
    if (!(r0 > 0.0) || !(r0 < 1.0)) throw PreconditionError("borderline radius must lie in (0, 1)");
    TestDensity g;
    g.kind = DensityKind::Borderline;
    g.dim = dim;
    g.centre = centre;
    g.radius = r0;
    g.alpha = alpha;
    return g;
}

std::string TestDensity::name() const {
    switch (kind) {
        case DensityKind::UniformBall:
            return "uniform-ball";
        case DensityKind::GaussianLike:
            return "gaussian-like";
        case DensityKind::Borderline:
            return std::isinf(alpha) ? "borderline-orlicz(inf)" : "borderline-orlicz(" + csv::num(alpha) + ")";
    }
    return {};
}

double TestDensity::radial(double r) const {
    switch (kind) {
        case DensityKind::UniformBall:
            return r < radius ? scale : 0.0;
        case DensityKind::GaussianLike:
            return r < support_radius() ? scale * std::exp(-0.5 * (r / radius) * (r / radius)) : 0.0;
        case DensityKind::Borderline:
            if (!(r < radius)) return 0.0;
            if (std::isinf(alpha)) return scale;
            return scale * std::pow(-std::log(r), 1.0 / alpha);
    }
    return 0.0;
}

double TestDensity::value(std::span<const double> z) const {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += (z[k] - centre[k]) * (z[k] - centre[k]);
    return radial(std::sqrt(s));
}

double TestDensity::support_radius() const { return kind == DensityKind::GaussianLike ? 12.0 * radius : radius; }

double TestDensity::mass() const {
    switch (kind) {
        case DensityKind::UniformBall:
            return scale * unit_ball_volume(dim) * std::pow(radius, dim);
        case DensityKind::GaussianLike:
            return scale * std::pow(2.0 * kPi * radius * radius, dim / 2.0);
        case DensityKind::Borderline: {
            if (std::isinf(alpha)) return scale * unit_ball_volume(dim) * std::pow(radius, dim);
            const double a = 1.0 + 1.0 / alpha;
            return scale * unit_sphere_area(dim) * std::pow(dim, -a) *
                   boost::math::tgamma(a, -dim * std::log(radius));
        }
    }
    return 0.0;
}

double TestDensity::mass_quadrature() const {
    const double Rs = support_radius();
    const auto f = [&](double r) { return radial(r) * std::pow(r, dim - 1); };
    double s = 0.0;
    // Octave pieces toward the origin resolve the borderline log singularity.
    double hi = Rs;
    for (int k = 0; k < 60; ++k) {
        const double lo = hi / 2.0;
        s += gk(f, lo, hi, 1e-12);
        hi = lo;
    }
    return unit_sphere_area(dim) * s;
}

double TestDensity::modular(double lambda, const OrliczIndex& idx) const {
    if (!(lambda > 0.0)) throw PreconditionError("modular needs lambda > 0");
    if (idx.is_infinite()) throw DomainError("the L-infinity norm has no exponential modular");
    const int d = dim;
    if (kind == DensityKind::UniformBall || (kind == DensityKind::Borderline && std::isinf(alpha))) {
        return unit_ball_volume(d) * std::pow(radius, d) * std::expm1(std::pow(scale / lambda, idx.alpha));
    }
    if (kind == DensityKind::Borderline) {
        if (idx.alpha > alpha) return kInf;
        if (idx.alpha == alpha) {
            // φ(g/λ) = r^{-q} - 1 with q = (scale/λ)^α.
            const double q = std::pow(scale / lambda, alpha);
            if (q >= d) return kInf;
            return unit_sphere_area(d) * (std::pow(radius, d - q) / (d - q) - std::pow(radius, d) / d);
        }
    }
    const double Rs = support_radius();
    const auto f = [&](double r) { return std::expm1(std::pow(radial(r) / lambda, idx.alpha)) * std::pow(r, d - 1); };
    double s = 0.0;
    double hi = Rs;
    for (int k = 0; k < 60; ++k) {
        const double lo = hi / 2.0;
        s += gk(f, lo, hi, 1e-13);
        hi = lo;
    }
    return unit_sphere_area(d) * s;
}

double TestDensity::orlicz_norm(const OrliczIndex& idx) const {
    if (idx.is_infinite()) {
        if (kind == DensityKind::Borderline && !std::isinf(alpha)) return kInf;
        return scale;
    }
    if (kind == DensityKind::Borderline && idx.alpha > alpha) return kInf;
    return luxemburg_norm_from_modular([&](double l) { return modular(l, idx); }, scale);
}

// ---------------------------------------------------------------------------
// Kernel estimate

namespace {

struct Frame {
    int d;
    double R;
    Point mid;
    Point e, u, w;
    Point offset;  // midpoint minus density centre
    bool radial;
};

Frame make_frame(const TestDensity& g, std::span<const double> x, std::span<const double> y) {
    Frame f{};
    f.d = g.dim;
    const int d = g.dim;
    if (static_cast<int>(x.size()) < d || static_cast<int>(y.size()) < d)
        throw PreconditionError("points must have the density's dimension");
    double r2 = 0.0;
    for (int k = 0; k < d; ++k) r2 += (x[k] - y[k]) * (x[k] - y[k]);
    f.R = std::sqrt(r2);
    if (!(f.R > 0.0)) throw PreconditionError("kernel estimate requires x != y");
    double off2 = 0.0;
    for (int k = 0; k < d; ++k) {
        f.mid[k] = 0.5 * (x[k] + y[k]);
        f.e[k] = (x[k] - y[k]) / f.R;
        f.offset[k] = f.mid[k] - g.centre[k];
        off2 += f.offset[k] * f.offset[k];
    }
    f.radial = std::sqrt(off2) <= 1e-9 * f.R;
    // Complete e to an orthonormal frame using the axis least aligned with it.
    int axis = 0;
    for (int k = 1; k < d; ++k) {
        if (std::abs(f.e[k]) < std::abs(f.e[axis])) axis = k;
    }
    Point a{};
    a[axis] = 1.0;
    double dot = 0.0;
    for (int k = 0; k < d; ++k) dot += a[k] * f.e[k];
    double nu = 0.0;
    for (int k = 0; k < d; ++k) {
        f.u[k] = a[k] - dot * f.e[k];
        nu += f.u[k] * f.u[k];
    }
    nu = std::sqrt(nu);
    for (int k = 0; k < d; ++k) f.u[k] /= nu;
    if (d == 3) {
        f.w = {f.e[1] * f.u[2] - f.e[2] * f.u[1], f.e[2] * f.u[0] - f.e[0] * f.u[2], f.e[0] * f.u[1] - f.e[1] * f.u[0]};
    }
    return f;
}

// |K(x - z) - K(y - z)| for z at distance ρ = R/2 + delta from the midpoint
// and angle θ ∈ [0, π/2] from the axis, evaluated in the (axis, normal)
// plane. The offsets are formed without cancellation near z = x.
double kernel_gap(double rho, double delta, double theta, double R, int d) {
    const double sh = std::sin(0.5 * theta);
    const double p0 = -delta + 2.0 * rho * sh * sh;
    const double q0 = -0.5 * R - rho * std::cos(theta);
    const double p1 = -rho * std::sin(theta);
    const double pp = p0 * p0 + p1 * p1, qq = q0 * q0 + p1 * p1;
    double kp, kq;
    if (d == 2) {
        kp = 1.0 / pp;
        kq = 1.0 / qq;
    } else {
        kp = 1.0 / (pp * std::sqrt(pp));
        kq = 1.0 / (qq * std::sqrt(qq));
    }
    return std::hypot(p0 * kp - q0 * kq, p1 * (kp - kq));
}

// Angles in [lo, hi] solving a cos t + b sin t = k.
void trig_roots(double a, double b, double k, double lo, double hi, std::vector<double>& out) {
    const double m = std::hypot(a, b);
    if (!(m > 0.0) || std::abs(k) > m) return;
    const double phase = std::atan2(b, a), w = std::acos(k / m);
    for (double t : {phase + w, phase - w}) {
        for (int turn = -2; turn <= 2; ++turn) {
            const double u = t + 2.0 * kPi * turn;
            if (u > lo && u < hi) out.push_back(u);
        }
    }
}

// Angular weight of g at (ρ, θ): the sum over the mirror pair (d = 2) or the
// integral over the azimuth (d = 3).
double angular_density(const TestDensity& g, const Frame& f, double rho, double theta, double tol) {
    const double c = std::cos(theta), s = std::sin(theta);
    const int d = f.d;
    const auto at = [&](const Point& dir) {
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) {
            const double v = f.offset[k] + rho * dir[k];
            r2 += v * v;
        }
        return g.radial(std::sqrt(r2));
    };
    if (d == 2) {
        Point a{}, b{};
        for (int k = 0; k < 2; ++k) {
            a[k] = c * f.e[k] + s * f.u[k];
            b[k] = c * f.e[k] - s * f.u[k];
        }
        return at(a) + at(b);
    }
    const auto az = [&](double phi) {
        Point dir{};
        const double cp = std::cos(phi), sp = std::sin(phi);
        for (int k = 0; k < 3; ++k) dir[k] = c * f.e[k] + s * (cp * f.u[k] + sp * f.w[k]);
        return at(dir);
    };
    std::vector<double> br{0.0, kPi, 2.0 * kPi};
    if (!f.radial && s > 0.0) {
        double oe = 0.0, ou = 0.0, ow = 0.0, o2 = 0.0;
        for (int k = 0; k < 3; ++k) {
            oe += f.offset[k] * f.e[k];
            ou += f.offset[k] * f.u[k];
            ow += f.offset[k] * f.w[k];
            o2 += f.offset[k] * f.offset[k];
        }
        const double kap = (g.support_radius() * g.support_radius() - o2 - rho * rho) / (2.0 * rho);
        trig_roots(ou, ow, (kap - oe * c) / s, 0.0, 2.0 * kPi, br);
        std::sort(br.begin(), br.end());
    }
    return detail::adaptive_gk(az, br, tol, 0.0, 400, [](double, double, double) {}).value;
}

std::vector<double> theta_breaks(double delta, double R, const Frame& f, double rho, double support) {
    std::vector<double> b{0.0, 0.5 * kPi};
    const double s = std::abs(delta) / (0.5 * R);
    if (s < 0.5) {
        for (double t = std::max(s, 1e-14); t < 0.5 * kPi; t *= 2.0) b.push_back(t);
    }
    if (!f.radial) {
        // Angles where the shell meets the support boundary of g, for both
        // halves of the folded range.
        double oe = 0.0, ou = 0.0, ow = 0.0;
        for (int k = 0; k < f.d; ++k) {
            oe += f.offset[k] * f.e[k];
            ou += f.offset[k] * f.u[k];
            ow += f.offset[k] * f.w[k];
        }
        const double o2 = oe * oe + ou * ou + ow * ow;
        const double kap = (support * support - o2 - rho * rho) / (2.0 * rho);
        const double side = std::hypot(ou, ow);
        for (double se : {1.0, -1.0}) {
            for (double su : {1.0, -1.0}) trig_roots(se * oe, su * side, kap, 0.0, 0.5 * kPi, b);
        }
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

}  // namespace

KernelLemmaValue kernel_lemma_lhs(const TestDensity& g, std::span<const double> x, std::span<const double> y,
                                  const OrliczIndex& idx, double tol, unsigned max_intervals) {
    const Frame f = make_frame(g, x, y);
    const int d = f.d;
    const double R = f.R;
    double off = 0.0;
    for (int k = 0; k < d; ++k) off += f.offset[k] * f.offset[k];
    off = std::sqrt(off);
    const double rho_max = (f.radial ? 0.0 : off) + g.support_radius();

    const double inner_tol = tol * 1e-3;
    // The gap is symmetric under θ -> π - θ (reflection swaps x and y), so
    // the angular range folds onto [0, π/2].
    const auto shell = [&](double rho) {
        const double delta = rho - 0.5 * R;
        const auto breaks = theta_breaks(delta, R, f, rho, g.support_radius());
        double s = 0.0;
        if (f.radial) {
            const double gr = g.radial(rho);
            if (gr == 0.0) return 0.0;
            const auto ang = [&](double th) {
                const double jac = d == 2 ? 1.0 : std::sin(th);
                return jac * kernel_gap(rho, delta, th, R, d);
            };
            for (std::size_t i = 0; i + 1 < breaks.size(); ++i) s += gk(ang, breaks[i], breaks[i + 1], inner_tol);
            s *= gr * (d == 2 ? 4.0 : 4.0 * kPi);
        } else {
            const auto ang = [&](double th) {
                const double jac = d == 2 ? 1.0 : std::sin(th);
                const double gd = angular_density(g, f, rho, th, inner_tol) + angular_density(g, f, rho, kPi - th, inner_tol);
                return gd == 0.0 ? 0.0 : jac * kernel_gap(rho, delta, th, R, d) * gd;
            };
            for (std::size_t i = 0; i + 1 < breaks.size(); ++i) s += gk(ang, breaks[i], breaks[i + 1], inner_tol);
        }
        return s * std::pow(rho, d - 1);
    };

    const double L = std::abs(std::log(R));
    const double r_mid = R < 1.0 ? std::pow(L, -idx.beta / d) : R;
    std::vector<double> b{0.0, 0.5 * R, R, r_mid, rho_max};
    for (int k = 1; k <= 20; ++k) {
        const double h = 0.5 * R * std::ldexp(1.0, -k);
        b.push_back(0.5 * R - h);
        b.push_back(0.5 * R + h);
    }
    for (double r = 2.0 * R; r < rho_max; r *= 2.0) b.push_back(r);
    for (double r = 0.25 * R; r > 1e-6 * R; r *= 0.5) b.push_back(r);
    if (!f.radial) {
        b.push_back(off);
        if (off > g.support_radius()) b.push_back(off - g.support_radius());
    }
    if (g.kind == DensityKind::GaussianLike) {
        for (double r = g.radius; r < rho_max; r += g.radius) b.push_back(r);
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    while (!b.empty() && b.back() > rho_max) b.pop_back();

    KernelLemmaValue out;
    detail::adaptive_gk(shell, b, tol, 0.0, static_cast<int>(max_intervals), [&](double, double hi, double v) {
        if (hi <= R) {
            out.inner += v;
        } else if (hi <= r_mid) {
            out.middle += v;
        } else {
            out.outer += v;
        }
    });
    out.lhs = out.inner + out.middle + out.outer;
    return out;
}

namespace {

double lemma_denominator(const TestDensity& g, const OrliczIndex& idx, double R) {
    return (g.orlicz_norm(idx) + g.mass()) * psi_alpha(R, idx);
}

double checked_lhs(const TestDensity& g, std::span<const double> x, std::span<const double> y,
                   const OrliczIndex& idx, const QuadSpec& quad) {
    const double fine = kernel_lemma_lhs(g, x, y, idx, quad.tol, quad.max_intervals).lhs;
    const double coarse = kernel_lemma_lhs(g, x, y, idx, quad.coarse_tol, quad.max_intervals).lhs;
    if (std::abs(fine - coarse) > quad.agreement * std::abs(fine))
        throw AccuracyError("kernel estimate quadrature did not converge: " + csv::num(coarse) + " vs " + csv::num(fine));
    return fine;
}

}  // namespace

double kernel_lemma_ratio(const TestDensity& g, std::span<const double> x, std::span<const double> y,
                          const OrliczIndex& idx, const QuadSpec& quad) {
    double r2 = 0.0;
    for (int k = 0; k < g.dim; ++k) r2 += (x[k] - y[k]) * (x[k] - y[k]);
    return checked_lhs(g, x, y, idx, quad) / lemma_denominator(g, idx, std::sqrt(r2));
}

LemmaReport kernel_lemma_check(const TestDensity& g, const OrliczIndex& idx, const KernelLemmaConfig& cfg) {
    if (cfg.separations < 2 || cfg.directions < 1) throw PreconditionError("kernel sweep needs >= 2 separations and >= 1 direction");
    if (!(cfg.r_min > 0.0) || !(cfg.r_max > cfg.r_min)) throw PreconditionError("invalid separation range");
    const int d = g.dim;
    const double norm_sum = g.orlicz_norm(idx) + g.mass();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal;
    std::vector<double> lx, ly;
    double worst = 0.0, classical = 0.0;
    for (int i = 0; i < cfg.separations; ++i) {
        const double R = std::exp(std::log(cfg.r_min) + (std::log(cfg.r_max) - std::log(cfg.r_min)) * i / (cfg.separations - 1));
        for (int j = 0; j < cfg.directions; ++j) {
            Point e{};
            double n2 = 0.0;
            while (!(n2 > 1e-12)) {
                n2 = 0.0;
                for (int k = 0; k < d; ++k) {
                    e[k] = normal(rng);
                    n2 += e[k] * e[k];
                }
            }
            const double n = std::sqrt(n2);
            Point x{}, y{};
            for (int k = 0; k < d; ++k) {
                x[k] = g.centre[k] + 0.5 * R * e[k] / n;
                y[k] = g.centre[k] - 0.5 * R * e[k] / n;
            }
            const std::span<const double> xs(x.data(), d), ys(y.data(), d);
            double rr = 0.0;
            for (int k = 0; k < d; ++k) rr += (x[k] - y[k]) * (x[k] - y[k]);
            rr = std::sqrt(rr);
            const double lhs = checked_lhs(g, xs, ys, idx, cfg.quad);
            const double ratio = lhs / (norm_sum * psi_alpha(rr, idx));
            worst = std::max(worst, ratio);
            classical = std::max(classical, lhs / (rr * (1.0 + std::abs(std::log(rr)))));
            lx.push_back(std::log(rr));
            ly.push_back(std::log(ratio));
        }
    }
    LemmaReport r;
    r.lemma = "kernel-2.1";
    r.instances = lx.size();
    r.worst_ratio = worst;
    r.fitted_constant = worst;
    std::tie(r.slope, r.slope_halfwidth) = fit_slope(lx, ly);
    r.thresholds = {{"slope_min", cfg.slope_min}, {"slope_max", cfg.slope_max}};
    r.metrics = {{"alpha", idx.alpha}, {"orlicz_norm", g.orlicz_norm(idx)}, {"l1_norm", g.mass()},
                 {"classical_ratio_max", classical}};
    r.note = g.name();
    r.pass = std::isfinite(worst) && r.slope >= cfg.slope_min && r.slope <= cfg.slope_max;
    return r;
}

// ---------------------------------------------------------------------------
// Moments

namespace {

void require_finite_alpha(const OrliczIndex& idx) {
    if (idx.is_infinite()) throw DomainError("exponential moments need a finite alpha");
}

// c ⟨v⟩^{dα} for one particle.
double bracket_power(std::span<const double> v, int d, double c, const OrliczIndex& idx) {
    double v2 = 0.0;
    for (int k = 0; k < d; ++k) v2 += v[k] * v[k];
    return c * std::pow(1.0 + v2, 0.5 * d * idx.alpha);
}

double weighted_exp_sum(const PhaseEnsemble& ens, double c, const OrliczIndex& idx, double shift) {
    require_finite_alpha(idx);
    if (!(c > 0.0)) throw PreconditionError("moment rate c must be positive");
    double s = 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const double term = ens.weights[i] * std::exp(shift + bracket_power(ens.velocity(i), ens.dim, c, idx));
        if (!std::isfinite(term)) throw RangeError("exponential moment overflow at particle " + std::to_string(i), i, ens.time);
        s += term;
    }
    if (!std::isfinite(s)) throw RangeError("exponential moment overflow in the total", ens.size(), ens.time);
    return s;
}

}  // namespace

double moment_M(const PhaseEnsemble& ens, double c, const OrliczIndex& idx) {
    return weighted_exp_sum(ens, c, idx, 1.0);
}

MomentSeries moment_series(const Trajectory& traj, double c, const OrliczIndex& idx) {
    if (traj.size() < 3) throw PreconditionError("moment check needs at least three snapshots");
    MomentSeries s;
    s.times = traj.times;
    for (const auto& st : traj.states) s.M.push_back(moment_M(st, c, idx));
    const double d = traj.states.front().dim;
    const double expo = 1.0 - 1.0 / (d * idx.alpha);
    s.C_fit = 0.0;
    for (std::size_t k = 1; k + 1 < s.M.size(); ++k) {
        const double h0 = s.times[k] - s.times[k - 1], h1 = s.times[k + 1] - s.times[k];
        // Three-point derivative on a possibly uneven grid.
        const double deriv = (-h1 / (h0 * (h0 + h1))) * s.M[k - 1] + ((h1 - h0) / (h0 * h1)) * s.M[k] +
                             (h0 / (h1 * (h0 + h1))) * s.M[k + 1];
        s.dMdt.push_back(deriv);
        const double denom = 1.0 + std::pow(std::max(std::log(s.M[k]), 0.0), expo) * s.M[k];
        s.C_fit = std::max(s.C_fit, deriv / denom);
    }
    return s;
}

LemmaReport moment_inequality_check(const Trajectory& traj, double c, const OrliczIndex& idx) {
    const MomentSeries s = moment_series(traj, c, idx);
    double rel = 0.0;
    for (std::size_t k = 0; k < s.dMdt.size(); ++k) rel = std::max(rel, std::abs(s.dMdt[k]) / s.M[k + 1]);
    LemmaReport r;
    r.lemma = "moment-3.2";
    r.instances = s.dMdt.size();
    r.fitted_constant = s.C_fit;
    r.worst_ratio = s.C_fit;
    r.metrics = {{"c", c}, {"alpha", idx.alpha}, {"max_rel_dMdt", rel}};
    r.series = s.M;
    r.pass = std::isfinite(s.C_fit);
    return r;
}

LemmaReport moment_inequality_stability(const Trajectory& coarse, const Trajectory& fine, double c,
                                        const OrliczIndex& idx, double tolerance) {
    const MomentSeries a = moment_series(coarse, c, idx);
    const MomentSeries b = moment_series(fine, c, idx);
    LemmaReport r;
    r.lemma = "moment-3.2";
    r.instances = a.dMdt.size() + b.dMdt.size();
    r.fitted_constant = b.C_fit;
    r.worst_ratio = std::max(a.C_fit, b.C_fit);
    // Both fits at (numerical) zero count as agreement.
    const double scale = std::max(a.C_fit, b.C_fit);
    const double change = scale <= 1e-12 ? 0.0 : std::abs(a.C_fit - b.C_fit) / scale;
    r.thresholds = {{"stability_tolerance", tolerance}};
    r.metrics = {{"c", c}, {"alpha", idx.alpha}, {"C_fit_coarse", a.C_fit}, {"C_fit_fine", b.C_fit},
                 {"relative_change", change}};
    r.series = b.M;
    r.pass = std::isfinite(a.C_fit) && std::isfinite(b.C_fit) && change <= tolerance;
    return r;
}

double interp_lhs(const DensityGrid& grid, double lambda, const OrliczIndex& idx) {
    require_finite_alpha(idx);
    if (!(lambda > 0.0)) throw PreconditionError("lambda must be positive");
    const double v = grid.cell_volume();
    double s = 0.0;
    for (double m : grid.mass) {
        if (m == 0.0) continue;
        s += std::expm1(std::pow(m / v, idx.alpha) / lambda);
    }
    return s * v;
}

double interp_rhs(const PhaseEnsemble& ens, double c, const OrliczIndex& idx) {
    return weighted_exp_sum(ens, c, idx, 0.0);
}

LemmaReport exp_moment_orlicz_check(const PhaseEnsemble& ens, double c, const OrliczIndex& idx, double h,
                                    const LogGrid& lambda_grid) {
    const DensityGrid grid = density_histogram(ens, h);
    const double rhs = interp_rhs(ens, c, idx);
    LemmaReport r;
    r.lemma = "interp-3.1";
    r.instances = grid.cells();
    r.thresholds = {{"lambda_min", lambda_grid.lo}, {"lambda_max", lambda_grid.hi}};
    for (double lambda : lambda_grid.values()) {
        const double lhs = interp_lhs(grid, lambda, idx);
        if (lhs <= lambda * rhs) {
            r.fitted_constant = lambda;
            r.worst_ratio = lhs / rhs;
            r.pass = true;
            break;
        }
    }
    if (!r.pass) {
        r.fitted_constant = kInf;
        r.worst_ratio = kInf;
    }
    r.metrics = {{"c", c}, {"alpha", idx.alpha}, {"h", h}, {"rhs", rhs}};
    return r;
}

LemmaReport proposition_rho_bound(const Trajectory& traj, const OrliczIndex& idx, double h, double slope_tol) {
    if (traj.size() == 0) throw PreconditionError("empty trajectory");
    const int d = traj.states.front().dim;
    Box box;
    for (int k = 0; k < d; ++k) {
        double lo = kInf, hi = -kInf;
        for (const auto& st : traj.states) {
            for (std::size_t i = 0; i < st.size(); ++i) {
                lo = std::min(lo, st.positions[i * d + k]);
                hi = std::max(hi, st.positions[i * d + k]);
            }
        }
        box.lo[k] = std::floor(lo / h) * h;
        box.hi[k] = (std::floor(hi / h) + 1.0) * h;
    }
    LemmaReport r;
    r.lemma = "prop-1.1";
    r.instances = traj.size();
    double mean = 0.0;
    for (const auto& st : traj.states) {
        const double n = luxemburg_norm(density_histogram(st, h, box), idx);
        r.series.push_back(n);
        r.worst_ratio = std::max(r.worst_ratio, n);
        mean += n;
    }
    mean /= static_cast<double>(traj.size());
    r.fitted_constant = r.worst_ratio;
    double rel_slope = 0.0;
    if (traj.size() >= 2 && traj.times.back() > traj.times.front()) {
        std::tie(r.slope, r.slope_halfwidth) = fit_slope(traj.times, r.series);
        rel_slope = r.slope / mean;
    }
    r.thresholds = {{"relative_slope_max", slope_tol}};
    r.metrics = {{"alpha", idx.alpha}, {"h", h}, {"mean_norm", mean}, {"relative_slope", rel_slope}};
    r.pass = std::isfinite(r.worst_ratio) && rel_slope <= slope_tol;
    return r;
}

KernelSpec sin_test_kernel(int dim) {
    return KernelSpec::custom_kernel(dim, [dim](std::span<const double> w) {
        Point out{};
        for (int k = 0; k < dim; ++k) out[k] = std::sin(w[k]);
        return out;
    });
}

LemmaReport log2lip_check(const KernelSpec& spec, const Log2LipConfig& cfg) {
    spec.validate();
    if (cfg.points < 2 || cfg.samples < 1) throw PreconditionError("log2lip scan needs >= 2 points and >= 1 sample");
    if (!(cfg.h_min > 0.0) || !(cfg.h_max <= 1.0 / 9.0) || !(cfg.h_max > cfg.h_min))
        throw PreconditionError("separations must lie in (0, 1/9]");
    const int d = spec.dim;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::normal_distribution<double> normal;
    std::vector<double> lx, ly;
    double worst = 0.0;
    for (int i = 0; i < cfg.points; ++i) {
        const double h = std::exp(std::log(cfg.h_min) + (std::log(cfg.h_max) - std::log(cfg.h_min)) * i / (cfg.points - 1));
        double best = 0.0;
        for (int j = 0; j < cfg.samples; ++j) {
            Point x{}, e{}, y{};
            double n2 = 0.0;
            for (int k = 0; k < d; ++k) {
                x[k] = 0.1 * unif(rng);
                e[k] = normal(rng);
                n2 += e[k] * e[k];
            }
            const double n = std::sqrt(n2);
            for (int k = 0; k < d; ++k) y[k] = x[k] + h * e[k] / n;
            best = std::max(best, log2lip_modulus({x.data(), static_cast<std::size_t>(d)},
                                                  {y.data(), static_cast<std::size_t>(d)}, spec));
        }
        worst = std::max(worst, best);
        lx.push_back(std::log(h));
        ly.push_back(std::log(best));
    }
    LemmaReport r;
    r.lemma = "log2lip-1.2";
    r.instances = static_cast<std::size_t>(cfg.points) * cfg.samples;
    r.worst_ratio = worst;
    r.fitted_constant = worst;
    std::tie(r.slope, r.slope_halfwidth) = fit_slope(lx, ly);
    r.thresholds = {{"slope_min", cfg.slope_min}};
    r.metrics = {{"h_min", cfg.h_min}, {"h_max", cfg.h_max}};
    r.pass = std::isfinite(worst) && r.slope >= cfg.slope_min;
    return r;
}

}  // namespace vpstab
