#include "vpstab/ensemble.hpp"

#include <cmath>
#include <string>

#include "vpstab/error.hpp"

namespace vpstab {

PhaseEnsemble::PhaseEnsemble(int dim_, std::size_t n)
    : dim(dim_), weights(n, 0.0), positions(n * dim_, 0.0), velocities(n * dim_, 0.0) {}

double PhaseEnsemble::total_mass() const {
    double m = 0.0;
    for (double w : weights) m += w;
    return m;
}

Point PhaseEnsemble::momentum() const {
    Point p{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < size(); ++i) {
        for (int k = 0; k < dim; ++k) p[k] += weights[i] * velocities[i * dim + k];
    }
    return p;
}

double PhaseEnsemble::momentum_scale() const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        double v2 = 0.0;
        for (int k = 0; k < dim; ++k) v2 += velocities[i * dim + k] * velocities[i * dim + k];
        s += weights[i] * std::sqrt(v2);
    }
    return s;
}

void PhaseEnsemble::validate() const {
    if (dim != 2 && dim != 3) {
        throw PreconditionError("ensemble dimension must be 2 or 3, got " + std::to_string(dim));
    }
    const std::size_t n = weights.size();
    if (n == 0) throw PreconditionError("ensemble must contain at least one particle");
    if (positions.size() != n * dim || velocities.size() != n * dim) {
        throw PreconditionError("ensemble arrays have inconsistent lengths");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
            throw PreconditionError("particle " + std::to_string(i) + " has non-positive weight");
        }
    }
    for (std::size_t k = 0; k < positions.size(); ++k) {
        if (!std::isfinite(positions[k]) || !std::isfinite(velocities[k])) {
            throw PreconditionError("particle " + std::to_string(k / dim) + " has a non-finite coordinate");
        }
    }
    if (!std::isfinite(time) || time < 0.0) throw PreconditionError("ensemble time must be finite and >= 0");
}

}  // namespace vpstab
