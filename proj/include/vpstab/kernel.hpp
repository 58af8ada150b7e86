#pragma once

#include <functional>
#include <span>
#include <vector>

#include "vpstab/ensemble.hpp"

namespace vpstab {

enum class KernelKind { Newton, CustomLog2Lip };

/// User-supplied bounded kernel; receives a displacement of length `dim`.
using CustomKernel = std::function<Point(std::span<const double>)>;

/// Interaction kernel K(x) = sign * x / (|x|^2 + softening^2)^{dim/2}, or a
/// custom bounded kernel for the log^2-Lipschitz class.
struct KernelSpec {
    int dim = 2;
    int sign = 1;            ///< +1 repulsive (plasma), -1 attractive (gravity)
    double softening = 0.0;  ///< Plummer length; 0 gives the exact singular kernel
    KernelKind kind = KernelKind::Newton;
    CustomKernel custom;

    static KernelSpec newton(int dim, int sign, double softening = 0.0);
    static KernelSpec custom_kernel(int dim, CustomKernel k);

    void validate() const;
};

Point eval_kernel(std::span<const double> x, const KernelSpec& spec);

/// E(q_j) = Σ_i w_i K(q_j - x_i) for flat `queries` (dim = spec.dim). Each
/// query is reduced with `pairwise_sum`, so threaded and serial runs agree
/// bit for bit. Throws DomainError naming the pair when an unsoftened query
/// coincides with a particle.
std::vector<double> field_direct(std::span<const double> queries, const PhaseEnsemble& ens,
                                 const KernelSpec& spec);

/// Self-consistent field at every particle, excluding the self pair.
std::vector<double> self_field(const PhaseEnsemble& ens, const KernelSpec& spec);

/// Exact field of a uniform disk of radius R and density rho0 centred at 0.
Point field_analytic_disk(const Point& x, double radius, double density, int sign);

/// |K(x) - K(y)| / (|x-y| ln(|x-y|)^2) for 0 < |x-y| <= 1/9.
double log2lip_modulus(std::span<const double> x, std::span<const double> y, const KernelSpec& spec);

/// 0.05 * (bounding-box volume / N)^{1/d}.
double default_softening(const PhaseEnsemble& ens);

}  // namespace vpstab
