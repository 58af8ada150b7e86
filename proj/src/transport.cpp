#include "vpstab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "network_simplex.hpp"
#include "vpstab/csv.hpp"
#include "vpstab/error.hpp"

namespace vpstab {

double DiscreteMeasure::total_mass() const {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

void DiscreteMeasure::validate() const {
    if (dim < 1) throw PreconditionError("measure dimension must be >= 1");
    if (weights.empty()) throw PreconditionError("measure must have at least one atom");
    if (points.size() != weights.size() * static_cast<std::size_t>(dim)) {
        throw PreconditionError("measure points and weights have inconsistent lengths");
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
            throw PreconditionError("atom " + std::to_string(i) + " has non-positive weight");
        }
    }
    for (double p : points) {
        if (!std::isfinite(p)) throw PreconditionError("measure has a non-finite coordinate");
    }
}

namespace {

double euclidean(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

struct Merged {
    std::vector<std::size_t> rep;                   // representative atom per group
    std::vector<double> weight;                     // group mass
    std::vector<std::vector<std::size_t>> members;  // original atoms per group
};

// Union of atoms closer than `tol` in the max norm.
Merged merge_atoms(const DiscreteMeasure& m, double tol) {
    const std::size_t n = m.size();
    const int d = m.dim;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return m.points[a * d] < m.points[b * d]; });

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t a = 0; a < n; ++a) {
        const std::size_t ia = order[a];
        for (std::size_t b = a + 1; b < n; ++b) {
            const std::size_t ib = order[b];
            if (m.points[ib * d] - m.points[ia * d] > tol) break;
            bool close = true;
            for (int k = 1; k < d && close; ++k) close = std::abs(m.points[ia * d + k] - m.points[ib * d + k]) <= tol;
            if (close) {
                const std::size_t ra = find(ia), rb = find(ib);
                if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
            }
        }
    }

    Merged out;
    std::vector<std::size_t> group_of(n, std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        if (group_of[r] == std::numeric_limits<std::size_t>::max()) {
            group_of[r] = out.rep.size();
            out.rep.push_back(r);
            out.weight.push_back(0.0);
            out.members.emplace_back();
        }
        const std::size_t g = group_of[r];
        out.weight[g] += m.weights[i];
        out.members[g].push_back(i);
    }
    return out;
}

void check_balance(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    mu.validate();
    nu.validate();
    if (mu.dim != nu.dim) throw PreconditionError("measures live in different dimensions");
    const double a = mu.total_mass();
    const double b = nu.total_mass();
    if (std::abs(a - b) > 1e-9 * a) {
        throw PreconditionError("measures have different total mass (" + csv::num(a) + " vs " + csv::num(b) + ")");
    }
}

}  // namespace

TransportPlan transport_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const GroundCost& cost,
                              const ExactSolverOptions& opts) {
    check_balance(mu, nu);
    const Merged gm = merge_atoms(mu, opts.merge_tol);
    const Merged gn = merge_atoms(nu, opts.merge_tol);
    const std::size_t n1 = gm.rep.size();
    const std::size_t n2 = gn.rep.size();
    if (n1 + n2 > opts.cap) {
        throw SizeError("exact W1 support " + std::to_string(n1 + n2) + " exceeds cap " + std::to_string(opts.cap) +
                        "; use w1_sinkhorn for large instances");
    }

    std::vector<double> c(n1 * n2);
    double max_cost = 0.0;
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) {
            const double v = cost(mu.point(gm.rep[i]), nu.point(gn.rep[j]));
            if (!(v >= 0.0) || !std::isfinite(v)) throw PreconditionError("ground cost must be finite and >= 0");
            c[i * n2 + j] = v;
            max_cost = std::max(max_cost, v);
        }
    }
    // Keep |cost| * scale well inside int64 once multiplied by the node count.
    const double scale = max_cost > 0.0 ? std::min(opts.cost_scale, 1e14 / max_cost) : opts.cost_scale;
    std::vector<std::int64_t> ic(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) ic[k] = std::llround(c[k] * scale);

    const double ratio = mu.total_mass() / nu.total_mass();
    std::vector<double> demand(gn.weight);
    for (double& w : demand) w *= ratio;

    detail::NetworkSimplex ns(gm.weight, demand, std::move(ic));
    ns.run();
    if (ns.artificial_flow() > 1e-9 * mu.total_mass()) throw Error("exact transport left mass unassigned");

    TransportPlan plan;
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) {
            const double f = ns.flow(i, j);
            if (!(f > 0.0)) continue;
            for (std::size_t a : gm.members[i]) {
                for (std::size_t b : gn.members[j]) {
                    const double m = f * (mu.weights[a] / gm.weight[i]) * (nu.weights[b] / gn.weight[j]);
                    if (!(m > 0.0)) continue;
                    plan.entries.push_back({a, b, m});
                }
            }
        }
    }
    std::sort(plan.entries.begin(), plan.entries.end(), [](const PlanEntry& x, const PlanEntry& y) {
        return x.source != y.source ? x.source < y.source : x.target < y.target;
    });
    double total = 0.0;
    for (const auto& e : plan.entries) total += e.mass * cost(mu.point(e.source), nu.point(e.target));
    plan.cost = total;
    return plan;
}

TransportPlan w1_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const ExactSolverOptions& opts) {
    return transport_exact(mu, nu, euclidean, opts);
}

SinkhornResult w1_sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double reg, int max_iter,
                           double tol) {
    check_balance(mu, nu);
    if (!(reg > 0.0)) throw PreconditionError("Sinkhorn regularization must be positive");
    if (max_iter < 1) throw PreconditionError("Sinkhorn needs max_iter >= 1");
    const std::size_t n1 = mu.size();
    const std::size_t n2 = nu.size();
    const double mass = mu.total_mass();
    const double ratio = mass / nu.total_mass();

    std::vector<double> c(n1 * n2), ct(n2 * n1);
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) {
            const double v = euclidean(mu.point(i), nu.point(j));
            c[i * n2 + j] = v;
            ct[j * n1 + i] = v;
        }
    }
    std::vector<double> loga(n1), logb(n2);
    for (std::size_t i = 0; i < n1; ++i) loga[i] = std::log(mu.weights[i]);
    for (std::size_t j = 0; j < n2; ++j) logb[j] = std::log(nu.weights[j] * ratio);

    std::vector<double> f(n1, 0.0), g(n2, 0.0), tmp(std::max(n1, n2));
    auto lse = [&](std::size_t n) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, tmp[k]);
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += std::exp(tmp[k] - mx);
        return mx + std::log(s);
    };
    auto row_violation = [&]() {
        double v = 0.0;
        for (std::size_t i = 0; i < n1; ++i) {
            double r = 0.0;
            for (std::size_t j = 0; j < n2; ++j) r += std::exp((f[i] + g[j] - c[i * n2 + j]) / reg);
            v += std::abs(r - mu.weights[i]);
        }
        return v / mass;
    };

    SinkhornResult best;
    best.marginal_violation = std::numeric_limits<double>::infinity();
    std::vector<double> best_f, best_g;
    for (int it = 1; it <= max_iter; ++it) {
        for (std::size_t i = 0; i < n1; ++i) {
            for (std::size_t j = 0; j < n2; ++j) tmp[j] = (g[j] - c[i * n2 + j]) / reg;
            f[i] = reg * (loga[i] - lse(n2));
        }
        for (std::size_t j = 0; j < n2; ++j) {
            for (std::size_t i = 0; i < n1; ++i) tmp[i] = (f[i] - ct[j * n1 + i]) / reg;
            g[j] = reg * (logb[j] - lse(n1));
        }
        const double viol = row_violation();
        if (viol < best.marginal_violation) {
            best.marginal_violation = viol;
            best.iterations = it;
            best_f = f;
            best_g = g;
        }
        if (viol <= tol) {
            best.converged = true;
            break;
        }
    }
    double cost = 0.0;
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) {
            cost += std::exp((best_f[i] + best_g[j] - c[i * n2 + j]) / reg) * c[i * n2 + j];
        }
    }
    best.cost = cost;
    return best;
}

CouplingGap identity_coupling_gap(const PhaseEnsemble& a, const PhaseEnsemble& b) {
    if (a.size() != b.size() || a.dim != b.dim) {
        throw PreconditionError("identity coupling needs ensembles with equal size and dimension");
    }
    CouplingGap gap;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double w = a.weights[i];
        if (std::abs(w - b.weights[i]) > 1e-12 * w) {
            throw PreconditionError("identity coupling needs equal weights (particle " + std::to_string(i) + ")");
        }
        gap.x_gap += w * euclidean(a.position(i), b.position(i));
        gap.v_gap += w * euclidean(a.velocity(i), b.velocity(i));
    }
    return gap;
}

InitialBound w1_initial_bound(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const ExactSolverOptions& opts) {
    if (mu.dim % 2 != 0 || mu.dim < 2) throw PreconditionError("phase-space measures need an even dimension");
    const std::size_t d = static_cast<std::size_t>(mu.dim / 2);
    const auto split = [d](std::span<const double> a, std::span<const double> b) {
        return euclidean(a.first(d), b.first(d)) + euclidean(a.subspan(d), b.subspan(d));
    };
    InitialBound out;
    out.lower = w1_exact(mu, nu, opts).cost;
    out.upper = transport_exact(mu, nu, split, opts).cost;
    const double slack = 1e-9 * (1.0 + out.upper);
    if (out.upper > std::sqrt(2.0) * out.lower + slack || out.lower > out.upper + slack) {
        throw Error("initial-bound invariant violated: lower=" + csv::num(out.lower) + " upper=" + csv::num(out.upper));
    }
    return out;
}

DiscreteMeasure phase_measure(const PhaseEnsemble& ens) {
    DiscreteMeasure m;
    const int d = ens.dim;
    m.dim = 2 * d;
    m.weights = ens.weights;
    m.points.resize(ens.size() * 2 * d);
    for (std::size_t i = 0; i < ens.size(); ++i) {
        for (int k = 0; k < d; ++k) {
            m.points[i * 2 * d + k] = ens.positions[i * d + k];
            m.points[i * 2 * d + d + k] = ens.velocities[i * d + k];
        }
    }
    return m;
}

DiscreteMeasure spatial_measure(const PhaseEnsemble& ens) {
    DiscreteMeasure m;
    m.dim = ens.dim;
    m.weights = ens.weights;
    m.points = ens.positions;
    return m;
}

double plan_marginal_error(const TransportPlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    std::vector<double> rows(mu.size(), 0.0), cols(nu.size(), 0.0);
    for (const auto& e : plan.entries) {
        rows.at(e.source) += e.mass;
        cols.at(e.target) += e.mass;
    }
    double err = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) err = std::max(err, std::abs(rows[i] - mu.weights[i]));
    for (std::size_t j = 0; j < cols.size(); ++j) err = std::max(err, std::abs(cols[j] - nu.weights[j]));
    return err;
}

DiscreteMeasure read_measure_csv(std::istream& is) {
    const auto table = csv::read_numeric(is);
    if (table.header.size() < 2 || table.header[0] != "w") {
        throw PreconditionError("measure csv must have header w,x1..xn");
    }
    DiscreteMeasure m;
    m.dim = static_cast<int>(table.header.size() - 1);
    for (const auto& row : table.rows) {
        m.weights.push_back(row[0]);
        m.points.insert(m.points.end(), row.begin() + 1, row.end());
    }
    m.validate();
    return m;
}

void write_measure_csv(std::ostream& os, const DiscreteMeasure& m, std::string_view config_hash) {
    csv::write_provenance(os, config_hash);
    os << 'w';
    for (int k = 1; k <= m.dim; ++k) os << ",x" << k;
    os << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        os << csv::num(m.weights[i]);
        for (int k = 0; k < m.dim; ++k) os << ',' << csv::num(m.points[i * m.dim + k]);
        os << '\n';
    }
}

void write_plan_csv(std::ostream& os, const TransportPlan& plan, std::string_view config_hash) {
    csv::write_provenance(os, config_hash);
    os << "i,j,mass\n";
    for (const auto& e : plan.entries) os << e.source << ',' << e.target << ',' << csv::num(e.mass) << '\n';
}

}  // namespace vpstab
