#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vpstab/bounds.hpp"
#include "vpstab/ensemble.hpp"
#include "vpstab/flow.hpp"
#include "vpstab/kernel.hpp"
#include "vpstab/orlicz.hpp"

namespace vpstab {

/// Outcome of one numerical lemma check. `pass` is decided from the
/// recorded numbers and the thresholds stored alongside them.
struct LemmaReport {
    std::string lemma;
    std::size_t instances = 0;
    double worst_ratio = 0.0;
    double fitted_constant = 0.0;
    double slope = 0.0;
    double slope_halfwidth = 0.0;
    bool pass = false;
    std::vector<std::pair<std::string, double>> thresholds;
    std::vector<std::pair<std::string, double>> metrics;
    std::vector<double> series;
    std::string note;

    double metric(std::string_view name) const;
};

std::string report_json(const LemmaReport& r, std::string_view config_hash = {});
void write_report_json(std::ostream& os, const LemmaReport& r, std::string_view config_hash = {});

/// Least-squares slope of y against x with a ~95% half-width (2 standard errors).
std::pair<double, double> fit_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Radially symmetric test densities.

enum class DensityKind { UniformBall, GaussianLike, Borderline };

struct TestDensity {
    DensityKind kind = DensityKind::UniformBall;
    int dim = 2;
    Point centre{};
    double radius = 0.5;   ///< ball radius, Gaussian σ, or borderline r0
    double alpha = 1.0;    ///< borderline exponent (∞ gives the indicator of the ball)
    double scale = 1.0;    ///< multiplicative amplitude

    static TestDensity uniform_ball(int dim, double mass = 1.0, double radius = 0.5, Point centre = {});
    static TestDensity gaussian_like(int dim, double mass = 1.0, double sigma = 0.2, Point centre = {});
    /// |ln |z - centre||^{1/α} on the ball of radius r0 < 1.
    static TestDensity borderline(int dim, double alpha, double r0 = 0.5, Point centre = {});

    std::string name() const;
    double radial(double r) const;
    double value(std::span<const double> z) const;
    /// Radius beyond which the density vanishes (or is negligible).
    double support_radius() const;
    double mass() const;             ///< closed form
    double mass_quadrature() const;  ///< independent radial quadrature
    /// ∫ φ_α(g / λ); +∞ when the integral diverges.
    double modular(double lambda, const OrliczIndex& idx) const;
    double orlicz_norm(const OrliczIndex& idx) const;
};

struct QuadSpec {
    double tol = 1e-8;         ///< relative tolerance of the fine pass
    double coarse_tol = 1e-6;  ///< relative tolerance of the comparison pass
    double agreement = 1e-4;   ///< maximal relative change between passes
    unsigned max_intervals = 2000;  ///< bisections of the radial integral
};

/// ∫ |K(x-z) - K(y-z)| g(z) dz for the unsoftened Newton kernel, split by
/// distance ρ from the midpoint of x and y into [0,R], [R,|ln R|^{-β/d}] and
/// the remainder (R = |x-y|).
struct KernelLemmaValue {
    double lhs = 0.0;
    double inner = 0.0;   ///< ρ < R
    double middle = 0.0;  ///< R ≤ ρ < |ln R|^{-β/d}
    double outer = 0.0;
};

KernelLemmaValue kernel_lemma_lhs(const TestDensity& g, std::span<const double> x, std::span<const double> y,
                                  const OrliczIndex& idx, double tol, unsigned max_intervals = 2000);

/// LHS / ((‖g‖_φ + ‖g‖_1) ψ_α(|x-y|)). The LHS is computed at two tolerances
/// and an AccuracyError is raised when they disagree beyond `quad.agreement`.
double kernel_lemma_ratio(const TestDensity& g, std::span<const double> x, std::span<const double> y,
                          const OrliczIndex& idx, const QuadSpec& quad = {});

struct KernelLemmaConfig {
    double r_min = 1e-6;
    double r_max = 1e-2;
    int separations = 20;
    int directions = 10;
    std::uint64_t seed = 1;
    double slope_min = -0.05;
    double slope_max = 0.05;
    QuadSpec quad;
};

/// Sweeps |x-y| with the midpoint at the density centre and random axis
/// directions; passes when the log-log slope of the ratio lies in the band.
LemmaReport kernel_lemma_check(const TestDensity& g, const OrliczIndex& idx, const KernelLemmaConfig& cfg = {});

// ---------------------------------------------------------------------------
// Exponential velocity moments.

/// Σ w_i exp(1 + c ⟨v_i⟩^{dα}) with ⟨v⟩ = sqrt(1 + |v|^2). Throws RangeError
/// naming the particle on overflow.
double moment_M(const PhaseEnsemble& ens, double c, const OrliczIndex& idx);

struct MomentSeries {
    std::vector<double> times;
    std::vector<double> M;
    std::vector<double> dMdt;  ///< interior snapshots only (size - 2 entries)
    double C_fit = 0.0;        ///< smallest C with dM/dt ≤ C(1 + (ln M)^{1-1/(dα)} M)
};

MomentSeries moment_series(const Trajectory& traj, double c, const OrliczIndex& idx);

/// Passes when C_fit is finite; `metrics` carries the largest |dM/dt| / M.
LemmaReport moment_inequality_check(const Trajectory& traj, double c, const OrliczIndex& idx);

/// Compares C_fit between a run and its dt-halved counterpart.
LemmaReport moment_inequality_stability(const Trajectory& coarse, const Trajectory& fine, double c,
                                        const OrliczIndex& idx, double tolerance = 0.25);

// ---------------------------------------------------------------------------
// Exponential moment controls the Orlicz modular of ρ.

/// Σ_k h^d (exp(ρ_k^α / λ) - 1) over the histogram of `ens`.
double interp_lhs(const DensityGrid& grid, double lambda, const OrliczIndex& idx);
/// Σ w_i exp(c ⟨v_i⟩^{dα}).
double interp_rhs(const PhaseEnsemble& ens, double c, const OrliczIndex& idx);

/// Smallest grid λ with interp_lhs(λ) ≤ λ · interp_rhs; histogram edge `h`.
LemmaReport exp_moment_orlicz_check(const PhaseEnsemble& ens, double c, const OrliczIndex& idx, double h,
                                    const LogGrid& lambda_grid = {1e-3, 1e6, 50});

// ---------------------------------------------------------------------------

/// Luxemburg norm of the density histogram at every snapshot, on one box
/// covering the whole trajectory. Passes when the least-squares slope of the
/// norm against t, relative to its mean, stays below `slope_tol`.
LemmaReport proposition_rho_bound(const Trajectory& traj, const OrliczIndex& idx, double h,
                                  double slope_tol = 0.05);

/// K(w) = (sin w_1, ..., sin w_d): smooth, bounded, log^2-Lipschitz.
KernelSpec sin_test_kernel(int dim);

struct Log2LipConfig {
    double h_min = 1e-4;
    double h_max = 1e-1;
    int points = 40;
    int samples = 16;
    std::uint64_t seed = 1;
    double slope_min = -0.05;
};

/// Scans |K(x)-K(y)| / (h ln^2 h) over random pairs at separation h; passes
/// when the worst ratio is finite and does not grow as h decreases.
LemmaReport log2lip_check(const KernelSpec& spec, const Log2LipConfig& cfg = {});

}  // namespace vpstab
