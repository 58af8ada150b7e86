#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "vpstab/ensemble.hpp"

namespace vpstab {

/// Exponent α ∈ [1, ∞] of the exponential Orlicz space generated by
/// φ_α(τ) = exp(τ^α) - 1, with the derived exponents
///   β = 1 + 1/α ∈ [1, 2]  and  γ = 2 / (1 - 1/α) ∈ [2, ∞].
/// α = ∞ is stored as +infinity (β = 1, γ = 2); α = 1 gives γ = +infinity,
/// which callers must dispatch on rather than feed into arithmetic.
struct OrliczIndex {
    double alpha = 1.0;
    double beta = 2.0;
    double gamma_exp = 0.0;

    static OrliczIndex make(double alpha);
    static OrliczIndex infinite();

    bool is_infinite() const noexcept;
    bool is_one() const noexcept { return alpha == 1.0; }
};

/// exp(τ^α) - 1 via expm1. Throws DomainError for α = ∞.
double phi_alpha(double tau, const OrliczIndex& idx);

/// τ |ln τ|^β on [0, 1/9], constant (1/9) ln(9)^β beyond; ψ(0) = 0.
double psi_alpha(double tau, const OrliczIndex& idx);

/// Large-argument form τ ln(τ)^{1/α} of the complementary N-function; only
/// meaningful for τ ≥ 1.
double phi_bar_asymptotic(double tau, const OrliczIndex& idx);

/// Axis-aligned box; only the first `dim` components are used.
struct Box {
    Point lo{};
    Point hi{};
};

/// Piecewise-constant spatial density on a uniform grid of cubes of edge
/// `cell`. Cell k covers [origin + k h, origin + (k+1) h), lower-inclusive.
struct DensityGrid {
    int dim = 2;
    Point origin{};
    double cell = 1.0;
    std::array<std::size_t, 3> shape{1, 1, 1};
    std::vector<double> mass;    ///< row-major, last axis fastest
    double overflow_mass = 0.0;  ///< mass of particles outside the box

    std::size_t cells() const noexcept { return mass.size(); }
    double cell_volume() const;
    double density(std::size_t k) const { return mass[k] / cell_volume(); }
    std::vector<double> densities() const;
    double total_mass() const;  ///< includes the overflow bucket
};

DensityGrid density_histogram(const PhaseEnsemble& ens, double h, const Box& box);

/// Box aligned to multiples of h that contains every particle.
DensityGrid density_histogram(const PhaseEnsemble& ens, double h);

/// Solves Σ_k V φ_α(ρ_k / λ) = 1 for λ by log-bisection (relative 1e-13);
/// α = ∞ returns max ρ_k. All-zero input returns 0.
double luxemburg_norm(std::span<const double> values, double cell_volume, const OrliczIndex& idx);
double luxemburg_norm(const DensityGrid& grid, const OrliczIndex& idx);

/// Root of a strictly decreasing modular λ ↦ ∫ φ(|g|/λ) at level 1.
/// `scale_hint` seeds the bracket search.
double luxemburg_norm_from_modular(const std::function<double(double)>& modular, double scale_hint);

struct SupNorm {
    double value = 0.0;
    double argmax_p = 0.0;
};

/// max over p ∈ [α, p_max] of p^{-1/α} (Σ V ρ_k^p)^{1/p}: log-spaced scan with
/// `coarse_points` nodes, then golden-section refinement around the best node.
SupNorm lp_sup_norm(std::span<const double> values, double cell_volume, const OrliczIndex& idx, double p_max,
                    int coarse_points = 256);
SupNorm lp_sup_norm(const DensityGrid& grid, const OrliczIndex& idx, double p_max, int coarse_points = 256);

/// Calibrated band [k1, k2] for lp_sup_norm / luxemburg_norm on histogram
/// densities. The ratio never exceeds α^{-1/α} ≤ 1; the lower end was set
/// from a battery of smooth, heavy-tailed and log-singular profiles where
/// the smallest observed ratio was about 0.41.
inline constexpr double kOrliczBandLower = 0.3;
inline constexpr double kOrliczBandUpper = 1.0;

/// CSV `k1..kd,mass`, non-empty cells only.
void write_grid_csv(std::ostream& os, const DensityGrid& grid, std::string_view config_hash = {});

}  // namespace vpstab
