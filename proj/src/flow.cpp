#include "vpstab/flow.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "vpstab/csv.hpp"
#include "vpstab/error.hpp"

namespace vpstab {

void FlowConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw PreconditionError("flow dt must be positive");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw PreconditionError("flow t_end must be >= 0");
    if (record_every < 1) throw PreconditionError("flow record_every must be >= 1");
}

FieldModel::FieldModel(KernelSpec spec) : dim_(spec.dim), model_(std::move(spec)) {
    std::get<KernelSpec>(model_).validate();
}

FieldModel::FieldModel(int dim, ExternalField field) : dim_(dim), model_(std::move(field)) {
    if (dim != 2 && dim != 3) throw PreconditionError("field dimension must be 2 or 3");
}

FieldModel FieldModel::free_streaming(int dim) {
    return FieldModel(dim, [](std::span<const double>, double) { return Point{0.0, 0.0, 0.0}; });
}

std::vector<double> FieldModel::evaluate(const PhaseEnsemble& ens) const {
    if (ens.dim != dim_) throw PreconditionError("ensemble and field dimensions differ");
    if (const auto* spec = std::get_if<KernelSpec>(&model_)) return self_field(ens, *spec);
    const auto& field = std::get<ExternalField>(model_);
    std::vector<double> out(ens.positions.size());
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const Point e = field(ens.position(i), ens.time);
        for (int k = 0; k < dim_; ++k) out[i * dim_ + k] = e[k];
    }
    return out;
}

namespace {

void check_finite(const std::vector<double>& v, int dim, double time, const char* what) {
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!std::isfinite(v[k])) {
            throw NumericalBlowup(std::string("non-finite ") + what + " for particle " + std::to_string(k / dim) +
                                      " at t=" + csv::num(time),
                                  k / dim, time);
        }
    }
}

// Verlet update given the field at the current positions; leaves the field
// at the new positions in `field` for reuse by the next step.
PhaseEnsemble verlet(const PhaseEnsemble& ens, const FieldModel& model, double dt, double t_next,
                     std::vector<double>& field) {
    PhaseEnsemble out = ens;
    const std::size_t m = ens.positions.size();
    for (std::size_t k = 0; k < m; ++k) {
        out.velocities[k] = ens.velocities[k] + 0.5 * dt * field[k];
        out.positions[k] = ens.positions[k] + dt * out.velocities[k];
    }
    out.time = t_next;
    check_finite(out.positions, ens.dim, t_next, "position");
    field = model.evaluate(out);
    check_finite(field, ens.dim, t_next, "field");
    for (std::size_t k = 0; k < m; ++k) out.velocities[k] += 0.5 * dt * field[k];
    check_finite(out.velocities, ens.dim, t_next, "velocity");
    return out;
}

PhaseEnsemble rk4(const PhaseEnsemble& ens, const FieldModel& model, double dt, double t_next) {
    const std::size_t m = ens.positions.size();
    auto stage = [&](const PhaseEnsemble& base, const std::vector<double>& dx, const std::vector<double>& dv,
                     double h, double t) {
        PhaseEnsemble s = base;
        for (std::size_t k = 0; k < m; ++k) {
            s.positions[k] = base.positions[k] + h * dx[k];
            s.velocities[k] = base.velocities[k] + h * dv[k];
        }
        s.time = t;
        return s;
    };
    const double t0 = ens.time;
    const auto k1x = ens.velocities;
    const auto k1v = model.evaluate(ens);
    check_finite(k1v, ens.dim, t0, "field");
    const auto s2 = stage(ens, k1x, k1v, 0.5 * dt, t0 + 0.5 * dt);
    const auto k2x = s2.velocities;
    const auto k2v = model.evaluate(s2);
    check_finite(k2v, ens.dim, s2.time, "field");
    const auto s3 = stage(ens, k2x, k2v, 0.5 * dt, t0 + 0.5 * dt);
    const auto k3x = s3.velocities;
    const auto k3v = model.evaluate(s3);
    check_finite(k3v, ens.dim, s3.time, "field");
    const auto s4 = stage(ens, k3x, k3v, dt, t_next);
    const auto k4x = s4.velocities;
    const auto k4v = model.evaluate(s4);
    check_finite(k4v, ens.dim, t_next, "field");

    PhaseEnsemble out = ens;
    for (std::size_t k = 0; k < m; ++k) {
        out.positions[k] += dt / 6.0 * (k1x[k] + 2.0 * k2x[k] + 2.0 * k3x[k] + k4x[k]);
        out.velocities[k] += dt / 6.0 * (k1v[k] + 2.0 * k2v[k] + 2.0 * k3v[k] + k4v[k]);
    }
    out.time = t_next;
    check_finite(out.positions, ens.dim, t_next, "position");
    check_finite(out.velocities, ens.dim, t_next, "velocity");
    return out;
}

}  // namespace

PhaseEnsemble step(const PhaseEnsemble& ens, const FieldModel& model, double dt) {
    if (!(dt > 0.0)) throw PreconditionError("step requires dt > 0");
    ens.validate();
    auto field = model.evaluate(ens);
    check_finite(field, ens.dim, ens.time, "field");
    return verlet(ens, model, dt, ens.time + dt, field);
}

PhaseEnsemble step_rk4(const PhaseEnsemble& ens, const FieldModel& model, double dt) {
    if (!(dt > 0.0)) throw PreconditionError("step requires dt > 0");
    ens.validate();
    return rk4(ens, model, dt, ens.time + dt);
}

Trajectory integrate(const PhaseEnsemble& ens, const FieldModel& model, const FlowConfig& cfg) {
    cfg.validate();
    ens.validate();
    Trajectory traj;
    traj.times.push_back(ens.time);
    traj.states.push_back(ens);
    if (cfg.t_end == 0.0) return traj;

    // The last step is shortened so the run ends exactly at t_end.
    const auto n_steps = static_cast<long long>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
    const double t0 = ens.time;
    PhaseEnsemble cur = ens;
    std::vector<double> field;
    if (cfg.integrator == Integrator::VelocityVerlet) {
        field = model.evaluate(cur);
        check_finite(field, cur.dim, cur.time, "field");
    }
    for (long long s = 1; s <= n_steps; ++s) {
        const double t_next = s == n_steps ? t0 + cfg.t_end : t0 + static_cast<double>(s) * cfg.dt;
        const double h = t_next - cur.time;
        cur = cfg.integrator == Integrator::VelocityVerlet ? verlet(cur, model, h, t_next, field)
                                                           : rk4(cur, model, h, t_next);
        if (s % cfg.record_every == 0 || s == n_steps) {
            traj.times.push_back(cur.time);
            traj.states.push_back(cur);
        }
    }
    return traj;
}

std::pair<Trajectory, Trajectory> integrate_twin(const PhaseEnsemble& ens1, const PhaseEnsemble& ens2,
                                                 const FieldModel& model, const FlowConfig& cfg) {
    if (ens1.dim != ens2.dim) throw PreconditionError("twin ensembles must share the dimension");
    const double m1 = ens1.total_mass();
    const double m2 = ens2.total_mass();
    if (std::abs(m1 - m2) > 1e-12 * std::max(m1, m2)) {
        throw PreconditionError("twin ensembles must have equal total mass");
    }
    if (ens1.time != ens2.time) throw PreconditionError("twin ensembles must start at the same time");
    return {integrate(ens1, model, cfg), integrate(ens2, model, cfg)};
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, std::string_view config_hash) {
    csv::write_provenance(os, config_hash);
    if (traj.states.empty()) return;
    const int d = traj.states.front().dim;
    os << "t,i,w";
    for (int k = 1; k <= d; ++k) os << ",x" << k;
    for (int k = 1; k <= d; ++k) os << ",v" << k;
    os << '\n';
    for (std::size_t s = 0; s < traj.size(); ++s) {
        const auto& st = traj.states[s];
        const std::string t = csv::num(traj.times[s]);
        for (std::size_t i = 0; i < st.size(); ++i) {
            os << t << ',' << i << ',' << csv::num(st.weights[i]);
            for (int k = 0; k < d; ++k) os << ',' << csv::num(st.positions[i * d + k]);
            for (int k = 0; k < d; ++k) os << ',' << csv::num(st.velocities[i * d + k]);
            os << '\n';
        }
    }
}

}  // namespace vpstab
