#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "vpstab/ensemble.hpp"

namespace vpstab {

/// Weighted atoms in R^n, stored flat point-major.
struct DiscreteMeasure {
    int dim = 1;
    std::vector<double> points;
    std::vector<double> weights;

    std::size_t size() const noexcept { return weights.size(); }
    std::span<const double> point(std::size_t i) const {
        return {points.data() + i * dim, static_cast<std::size_t>(dim)};
    }
    double total_mass() const;
    void validate() const;
};

struct PlanEntry {
    std::size_t source;
    std::size_t target;
    double mass;
};

/// Coupling between two discrete measures, indexed by the original atoms.
struct TransportPlan {
    std::vector<PlanEntry> entries;
    double cost = 0.0;
};

struct ExactSolverOptions {
    std::size_t cap = 4096;      ///< max combined support after merging
    double cost_scale = 1e12;    ///< integer scaling of ground costs
    double merge_tol = 1e-12;    ///< coincident-atom tolerance
};

using GroundCost = std::function<double(std::span<const double>, std::span<const double>)>;

/// Optimal coupling for the Euclidean ground cost (exact W1).
/// Throws PreconditionError on mass mismatch beyond 1e-9 relative and
/// SizeError when the merged support exceeds the cap.
TransportPlan w1_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const ExactSolverOptions& opts = {});

/// Same solver with an arbitrary nonnegative ground cost.
TransportPlan transport_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const GroundCost& cost,
                              const ExactSolverOptions& opts = {});

struct SinkhornResult {
    double cost = 0.0;                ///< Σ P_ij |x_i - y_j| of the regularized plan
    double marginal_violation = 0.0;  ///< L1 row-marginal error relative to total mass
    int iterations = 0;
    bool converged = false;
};

/// Log-domain Sinkhorn with Euclidean ground cost. Stops once the relative
/// L1 marginal violation drops below `tol`; otherwise returns the best
/// iterate with `converged == false`.
SinkhornResult w1_sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double reg, int max_iter,
                           double tol = 1e-8);

/// Position and velocity gaps of the diagonal (index-matched) coupling.
struct CouplingGap {
    double x_gap = 0.0;
    double v_gap = 0.0;
};
CouplingGap identity_coupling_gap(const PhaseEnsemble& a, const PhaseEnsemble& b);

/// (W1 with Euclidean cost on R^{2d}, W1 with cost |x-y| + |v-w|). The
/// second never exceeds sqrt(2) times the first.
struct InitialBound {
    double lower = 0.0;
    double upper = 0.0;
};
InitialBound w1_initial_bound(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              const ExactSolverOptions& opts = {});

DiscreteMeasure phase_measure(const PhaseEnsemble& ens);
DiscreteMeasure spatial_measure(const PhaseEnsemble& ens);

/// Largest absolute marginal error of `plan` against mu and nu.
double plan_marginal_error(const TransportPlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// CSV `w,x1..xn`.
DiscreteMeasure read_measure_csv(std::istream& is);
void write_measure_csv(std::ostream& os, const DiscreteMeasure& m, std::string_view config_hash = {});
/// CSV `i,j,mass`.
void write_plan_csv(std::ostream& os, const TransportPlan& plan, std::string_view config_hash = {});

}  // namespace vpstab
