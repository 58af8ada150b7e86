#include "vpstab/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "vpstab/error.hpp"
#include "vpstab/reduce.hpp"

namespace vpstab {

KernelSpec KernelSpec::newton(int dim, int sign, double softening) {
    KernelSpec s;
    s.dim = dim;
    s.sign = sign;
    s.softening = softening;
    s.validate();
    return s;
}

KernelSpec KernelSpec::custom_kernel(int dim, CustomKernel k) {
    KernelSpec s;
    s.dim = dim;
    s.kind = KernelKind::CustomLog2Lip;
    s.custom = std::move(k);
    s.validate();
    return s;
}

void KernelSpec::validate() const {
    if (dim != 2 && dim != 3) throw PreconditionError("kernel dimension must be 2 or 3");
    if (sign != 1 && sign != -1) throw PreconditionError("kernel sign must be +1 or -1");
    if (!(softening >= 0.0) || !std::isfinite(softening)) {
        throw PreconditionError("softening must be finite and >= 0");
    }
    if (kind == KernelKind::CustomLog2Lip && !custom) {
        throw PreconditionError("custom kernel kind requires a kernel callable");
    }
}

namespace {

// Returns the Newton kernel scale sign/(|x|^2+eps^2)^{d/2}, or nullopt at the
// unsoftened singularity.
inline std::optional<double> newton_scale(const double* x, int dim, int sign, double eps2) {
    double r2 = eps2;
    for (int k = 0; k < dim; ++k) r2 += x[k] * x[k];
    if (r2 == 0.0) return std::nullopt;
    const double inv = dim == 2 ? 1.0 / r2 : 1.0 / (r2 * std::sqrt(r2));
    return sign * inv;
}

std::vector<double> field_impl(std::span<const double> queries, const PhaseEnsemble& ens,
                               const KernelSpec& spec, bool exclude_self) {
    spec.validate();
    const int d = spec.dim;
    if (ens.dim != d) throw PreconditionError("ensemble and kernel dimensions differ");
    if (queries.size() % d != 0) throw PreconditionError("query array length is not a multiple of dim");
    const std::size_t nq = queries.size() / d;
    const std::size_t n = ens.size();
    const double eps2 = spec.softening * spec.softening;
    const bool newton = spec.kind == KernelKind::Newton;

    std::vector<double> out(nq * d, 0.0);
    // First failure wins; the index is the smallest failing query so the
    // diagnostic does not depend on scheduling.
    std::size_t bad_query = nq;
    std::size_t bad_particle = 0;

#pragma omp parallel
    {
        std::vector<double> buf(static_cast<std::size_t>(d) * n);
        std::array<double, 3> diff{};
#pragma omp for schedule(static)
        for (std::ptrdiff_t jq = 0; jq < static_cast<std::ptrdiff_t>(nq); ++jq) {
            const std::size_t j = static_cast<std::size_t>(jq);
            const double* q = queries.data() + j * d;
            bool failed = false;
            std::size_t fail_i = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double* x = ens.positions.data() + i * d;
                for (int k = 0; k < d; ++k) diff[k] = q[k] - x[k];
                if (exclude_self && i == j) {
                    for (int k = 0; k < d; ++k) buf[k * n + i] = 0.0;
                    continue;
                }
                if (newton) {
                    auto s = newton_scale(diff.data(), d, spec.sign, eps2);
                    if (!s) {
                        if (!failed) {
                            failed = true;
                            fail_i = i;
                        }
                        for (int k = 0; k < d; ++k) buf[k * n + i] = 0.0;
                        continue;
                    }
                    const double ws = ens.weights[i] * *s;
                    for (int k = 0; k < d; ++k) buf[k * n + i] = ws * diff[k];
                } else {
                    const Point kv = spec.custom(std::span<const double>(diff.data(), d));
                    for (int k = 0; k < d; ++k) buf[k * n + i] = ens.weights[i] * kv[k];
                }
            }
            if (failed) {
#pragma omp critical(vpstab_field_fail)
                {
                    if (j < bad_query) {
                        bad_query = j;
                        bad_particle = fail_i;
                    }
                }
                continue;
            }
            for (int k = 0; k < d; ++k) {
                out[j * d + k] = pairwise_sum(std::span<const double>(buf.data() + k * n, n));
            }
        }
    }
    if (bad_query < nq) {
        throw DomainError("unsoftened kernel evaluated at coincident points: query " +
                          std::to_string(bad_query) + " and particle " + std::to_string(bad_particle));
    }
    return out;
}

}  // namespace

Point eval_kernel(std::span<const double> x, const KernelSpec& spec) {
    spec.validate();
    if (static_cast<int>(x.size()) != spec.dim) throw PreconditionError("point dimension differs from kernel dimension");
    if (spec.kind == KernelKind::CustomLog2Lip) return spec.custom(x);
    auto s = newton_scale(x.data(), spec.dim, spec.sign, spec.softening * spec.softening);
    if (!s) throw DomainError("Newton kernel is singular at x = 0 without softening");
    Point out{0.0, 0.0, 0.0};
    for (int k = 0; k < spec.dim; ++k) out[k] = *s * x[k];
    return out;
}

std::vector<double> field_direct(std::span<const double> queries, const PhaseEnsemble& ens,
                                 const KernelSpec& spec) {
    return field_impl(queries, ens, spec, false);
}

std::vector<double> self_field(const PhaseEnsemble& ens, const KernelSpec& spec) {
    return field_impl(ens.positions, ens, spec, true);
}

Point field_analytic_disk(const Point& x, double radius, double density, int sign) {
    if (!(radius > 0.0) || !(density > 0.0)) throw PreconditionError("disk radius and density must be positive");
    const double r2 = x[0] * x[0] + x[1] * x[1];
    const double amp = sign * std::numbers::pi * density;
    if (r2 <= radius * radius) return {amp * x[0], amp * x[1], 0.0};
    const double s = amp * radius * radius / r2;
    return {s * x[0], s * x[1], 0.0};
}

double log2lip_modulus(std::span<const double> x, std::span<const double> y, const KernelSpec& spec) {
    if (x.size() != y.size() || static_cast<int>(x.size()) != spec.dim) {
        throw PreconditionError("points must match the kernel dimension");
    }
    double h2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) h2 += (x[k] - y[k]) * (x[k] - y[k]);
    const double h = std::sqrt(h2);
    if (!(h > 0.0) || h > 1.0 / 9.0) {
        throw DomainError("log^2-Lipschitz modulus requires 0 < |x-y| <= 1/9");
    }
    const Point kx = eval_kernel(x, spec);
    const Point ky = eval_kernel(y, spec);
    double diff2 = 0.0;
    for (int k = 0; k < spec.dim; ++k) diff2 += (kx[k] - ky[k]) * (kx[k] - ky[k]);
    const double lh = std::log(h);
    return std::sqrt(diff2) / (h * lh * lh);
}

double default_softening(const PhaseEnsemble& ens) {
    const int d = ens.dim;
    double volume = 1.0;
    for (int k = 0; k < d; ++k) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i = 0; i < ens.size(); ++i) {
            lo = std::min(lo, ens.positions[i * d + k]);
            hi = std::max(hi, ens.positions[i * d + k]);
        }
        volume *= std::max(hi - lo, 1e-12);
    }
    return 0.05 * std::pow(volume / static_cast<double>(ens.size()), 1.0 / d);
}

}  // namespace vpstab
