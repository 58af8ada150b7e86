#include "vpstab/orlicz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "vpstab/csv.hpp"
#include "vpstab/error.hpp"

namespace vpstab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPsiCut = 1.0 / 9.0;
}  // namespace

OrliczIndex OrliczIndex::make(double alpha) {
    if (std::isnan(alpha) || alpha < 1.0) throw PreconditionError("Orlicz exponent alpha must lie in [1, inf]");
    OrliczIndex idx;
    idx.alpha = alpha;
    idx.beta = 1.0 / alpha + 1.0;
    idx.gamma_exp = 2.0 / (1.0 - 1.0 / alpha);
    return idx;
}

OrliczIndex OrliczIndex::infinite() { return make(kInf); }

bool OrliczIndex::is_infinite() const noexcept { return std::isinf(alpha); }

double phi_alpha(double tau, const OrliczIndex& idx) {
    if (idx.is_infinite()) throw DomainError("phi_alpha is not an N-function for alpha = inf; use the L-infinity norm");
    if (!(tau >= 0.0)) throw PreconditionError("phi_alpha requires tau >= 0");
    return std::expm1(std::pow(tau, idx.alpha));
}

double psi_alpha(double tau, const OrliczIndex& idx) {
    if (!(tau >= 0.0)) throw PreconditionError("psi_alpha requires tau >= 0");
    if (tau == 0.0) return 0.0;
    if (tau >= kPsiCut) return kPsiCut * std::pow(std::log(9.0), idx.beta);
    return tau * std::pow(std::abs(std::log(tau)), idx.beta);
}

double phi_bar_asymptotic(double tau, const OrliczIndex& idx) {
    if (!(tau >= 1.0)) throw DomainError("asymptotic complementary function needs tau >= 1");
    if (idx.is_infinite()) return tau;
    return tau * std::pow(std::log(tau), 1.0 / idx.alpha);
}

double DensityGrid::cell_volume() const { return std::pow(cell, dim); }

std::vector<double> DensityGrid::densities() const {
    std::vector<double> out(mass.size());
    const double v = cell_volume();
    for (std::size_t k = 0; k < mass.size(); ++k) out[k] = mass[k] / v;
    return out;
}

double DensityGrid::total_mass() const {
    double s = overflow_mass;
    for (double m : mass) s += m;
    return s;
}

DensityGrid density_histogram(const PhaseEnsemble& ens, double h, const Box& box) {
    if (!(h > 0.0)) throw PreconditionError("histogram cell size must be positive");
    ens.validate();
    const int d = ens.dim;
    DensityGrid g;
    g.dim = d;
    g.cell = h;
    g.origin = box.lo;
    std::size_t total = 1;
    for (int k = 0; k < 3; ++k) {
        if (k < d) {
            if (!(box.hi[k] > box.lo[k])) throw PreconditionError("histogram box must have positive extent");
            g.shape[k] = static_cast<std::size_t>(std::ceil((box.hi[k] - box.lo[k]) / h - 1e-12));
            g.shape[k] = std::max<std::size_t>(g.shape[k], 1);
        } else {
            g.shape[k] = 1;
        }
        total *= g.shape[k];
    }
    g.mass.assign(total, 0.0);
    for (std::size_t i = 0; i < ens.size(); ++i) {
        std::size_t flat = 0;
        bool inside = true;
        for (int k = 0; k < d; ++k) {
            const double u = std::floor((ens.positions[i * d + k] - box.lo[k]) / h);
            if (u < 0.0 || u >= static_cast<double>(g.shape[k])) {
                inside = false;
                break;
            }
            flat = flat * g.shape[k] + static_cast<std::size_t>(u);
        }
        if (inside) {
            g.mass[flat] += ens.weights[i];
        } else {
            g.overflow_mass += ens.weights[i];
        }
    }
    return g;
}

DensityGrid density_histogram(const PhaseEnsemble& ens, double h) {
    if (!(h > 0.0)) throw PreconditionError("histogram cell size must be positive");
    ens.validate();
    const int d = ens.dim;
    Box box;
    for (int k = 0; k < d; ++k) {
        double lo = kInf, hi = -kInf;
        for (std::size_t i = 0; i < ens.size(); ++i) {
            lo = std::min(lo, ens.positions[i * d + k]);
            hi = std::max(hi, ens.positions[i * d + k]);
        }
        box.lo[k] = std::floor(lo / h) * h;
        box.hi[k] = (std::floor(hi / h) + 1.0) * h;
    }
    return density_histogram(ens, h, box);
}

double luxemburg_norm_from_modular(const std::function<double(double)>& modular, double scale_hint) {
    if (!(scale_hint > 0.0) || !std::isfinite(scale_hint)) scale_hint = 1.0;
    double lo = scale_hint, hi = scale_hint;
    // Grow the bracket until modular(lo) >= 1 > modular(hi).
    int guard = 0;
    while (!(modular(hi) < 1.0)) {
        hi *= 2.0;
        if (++guard > 2000) throw Error("Luxemburg bracket search diverged");
    }
    guard = 0;
    while (!(modular(lo) >= 1.0)) {
        lo *= 0.5;
        if (++guard > 2000) throw Error("Luxemburg bracket search diverged");
    }
    while (hi / lo - 1.0 > 1e-13) {
        const double mid = std::sqrt(lo * hi);
        if (mid <= lo || mid >= hi) break;
        if (modular(mid) >= 1.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::sqrt(lo * hi);
}

double luxemburg_norm(std::span<const double> values, double cell_volume, const OrliczIndex& idx) {
    double vmax = 0.0;
    for (double v : values) vmax = std::max(vmax, std::abs(v));
    if (vmax == 0.0) return 0.0;
    if (idx.is_infinite()) return vmax;
    std::vector<double> nz;
    for (double v : values) {
        if (v != 0.0) nz.push_back(std::abs(v));
    }
    const auto modular = [&](double lambda) {
        double s = 0.0;
        for (double v : nz) s += std::expm1(std::pow(v / lambda, idx.alpha));
        return s * cell_volume;
    };
    return luxemburg_norm_from_modular(modular, vmax);
}

double luxemburg_norm(const DensityGrid& grid, const OrliczIndex& idx) {
    return luxemburg_norm(grid.densities(), grid.cell_volume(), idx);
}

SupNorm lp_sup_norm(std::span<const double> values, double cell_volume, const OrliczIndex& idx, double p_max,
                    int coarse_points) {
    if (idx.is_infinite()) throw DomainError("sup-p norm is defined for finite alpha only");
    if (!(p_max >= idx.alpha)) throw PreconditionError("p_max must be >= alpha");
    if (coarse_points < 2) throw PreconditionError("sup-p scan needs at least two nodes");
    double vmax = 0.0;
    for (double v : values) vmax = std::max(vmax, std::abs(v));
    if (vmax == 0.0) return {0.0, idx.alpha};
    std::vector<double> ratios;
    for (double v : values) {
        if (v != 0.0) ratios.push_back(std::abs(v) / vmax);
    }
    const double log_v = std::log(cell_volume);
    const double log_max = std::log(vmax);
    // log of p^{-1/α} ||g||_p, evaluated without overflow.
    const auto objective = [&](double p) {
        double s = 0.0;
        for (double r : ratios) s += std::pow(r, p);
        return -std::log(p) / idx.alpha + log_max + (log_v + std::log(s)) / p;
    };

    const double a = std::log(idx.alpha);
    const double b = std::log(p_max);
    const int n = coarse_points;
    int best = 0;
    double best_val = -kInf;
    std::vector<double> lp(n);
    for (int i = 0; i < n; ++i) {
        lp[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
        const double val = objective(std::exp(lp[i]));
        if (val > best_val) {
            best_val = val;
            best = i;
        }
    }
    double lo = lp[std::max(best - 1, 0)];
    double hi = lp[std::min(best + 1, n - 1)];
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double f1 = objective(std::exp(x1));
    double f2 = objective(std::exp(x2));
    while (hi - lo > 1e-12) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = objective(std::exp(x2));
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = objective(std::exp(x1));
        }
    }
    double arg = std::exp(0.5 * (lo + hi));
    double val = objective(arg);
    if (best_val > val) {
        val = best_val;
        arg = std::exp(lp[best]);
    }
    return {std::exp(val), arg};
}

SupNorm lp_sup_norm(const DensityGrid& grid, const OrliczIndex& idx, double p_max, int coarse_points) {
    return lp_sup_norm(grid.densities(), grid.cell_volume(), idx, p_max, coarse_points);
}

void write_grid_csv(std::ostream& os, const DensityGrid& grid, std::string_view config_hash) {
    csv::write_provenance(os, config_hash);
    for (int k = 1; k <= grid.dim; ++k) os << 'k' << k << ',';
    os << "mass\n";
    std::array<std::size_t, 3> idx{};
    for (std::size_t flat = 0; flat < grid.mass.size(); ++flat) {
        std::size_t rem = flat;
        for (int k = grid.dim - 1; k >= 0; --k) {
            idx[k] = rem % grid.shape[k];
            rem /= grid.shape[k];
        }
        if (grid.mass[flat] == 0.0) continue;
        for (int k = 0; k < grid.dim; ++k) os << idx[k] << ',';
        os << csv::num(grid.mass[flat]) << '\n';
    }
}

}  // namespace vpstab
