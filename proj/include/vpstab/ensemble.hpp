#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace vpstab {

/// Small fixed-capacity vector; only the first `dim` components are used.
using Point = std::array<double, 3>;

/// Weighted particle cloud in position-velocity space. Positions and
/// velocities are stored flat, particle-major (`x[i*dim + k]`).
struct PhaseEnsemble {
    int dim = 2;
    std::vector<double> weights;
    std::vector<double> positions;
    std::vector<double> velocities;
    double time = 0.0;

    PhaseEnsemble() = default;
    PhaseEnsemble(int dim, std::size_t n);

    std::size_t size() const noexcept { return weights.size(); }

    std::span<const double> position(std::size_t i) const {
        return {positions.data() + i * dim, static_cast<std::size_t>(dim)};
    }
    std::span<double> position(std::size_t i) {
        return {positions.data() + i * dim, static_cast<std::size_t>(dim)};
    }
    std::span<const double> velocity(std::size_t i) const {
        return {velocities.data() + i * dim, static_cast<std::size_t>(dim)};
    }
    std::span<double> velocity(std::size_t i) {
        return {velocities.data() + i * dim, static_cast<std::size_t>(dim)};
    }

    double total_mass() const;
    Point momentum() const;
    /// Σ w_i |v_i|, the natural scale for momentum-drift checks.
    double momentum_scale() const;

    /// Throws PreconditionError on inconsistent sizes, dim outside {2,3},
    /// empty ensembles, non-positive weights or non-finite entries.
    void validate() const;
};

}  // namespace vpstab
