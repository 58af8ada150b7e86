#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "vpstab/ensemble.hpp"
#include "vpstab/kernel.hpp"

namespace vpstab {

enum class Integrator { VelocityVerlet, RK4 };

struct FlowConfig {
    double dt = 1e-2;
    double t_end = 0.0;
    Integrator integrator = Integrator::VelocityVerlet;
    int record_every = 1;

    void validate() const;
};

/// Snapshots of one flow. All states share N, dim and weights.
struct Trajectory {
    std::vector<double> times;
    std::vector<PhaseEnsemble> states;

    std::size_t size() const noexcept { return times.size(); }
    const PhaseEnsemble& final_state() const { return states.back(); }
};

/// Prescribed field E(x, t), used for test hooks and free streaming.
using ExternalField = std::function<Point(std::span<const double> x, double t)>;

/// Force law driving the characteristics: either the self-consistent
/// particle field of a kernel or a prescribed external field.
class FieldModel {
public:
    FieldModel(KernelSpec spec);  // NOLINT(google-explicit-constructor)
    FieldModel(int dim, ExternalField field);

    static FieldModel free_streaming(int dim);

    int dim() const noexcept { return dim_; }
    bool self_consistent() const noexcept { return std::holds_alternative<KernelSpec>(model_); }

    /// Field at every particle position of `ens` (flat, dim per particle).
    std::vector<double> evaluate(const PhaseEnsemble& ens) const;

private:
    int dim_;
    std::variant<KernelSpec, ExternalField> model_;
};

/// One velocity-Verlet step: half kick, drift, half kick. Throws
/// NumericalBlowup with the particle index and time on non-finite values.
PhaseEnsemble step(const PhaseEnsemble& ens, const FieldModel& model, double dt);

/// One classical RK4 step of the characteristic system.
PhaseEnsemble step_rk4(const PhaseEnsemble& ens, const FieldModel& model, double dt);

/// Fixed-step integration to cfg.t_end. Snapshots are taken at the start,
/// every `record_every` steps, and at the final time.
Trajectory integrate(const PhaseEnsemble& ens, const FieldModel& model, const FlowConfig& cfg);

/// Evolves two ensembles, each under its own field, on identical time grids.
/// Total masses must agree to 1e-12 relative.
std::pair<Trajectory, Trajectory> integrate_twin(const PhaseEnsemble& ens1, const PhaseEnsemble& ens2,
                                                 const FieldModel& model, const FlowConfig& cfg);

/// CSV with header `t,i,w,x1..xd,v1..vd`, time-major then index-minor.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, std::string_view config_hash = {});

}  // namespace vpstab
