#include "network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vpstab/error.hpp"

namespace vpstab::detail {

NetworkSimplex::NetworkSimplex(std::span<const double> supply, std::span<const double> demand,
                               std::vector<std::int64_t> costs)
    : n1_(supply.size()), n2_(demand.size()), root_(static_cast<int>(supply.size() + demand.size())),
      cost_(std::move(costs)) {
    if (cost_.size() != n1_ * n2_) throw PreconditionError("cost matrix has the wrong size");
    std::int64_t max_cost = 0;
    for (auto c : cost_) max_cost = std::max(max_cost, c < 0 ? -c : c);
    art_cost_ = (max_cost + 1) * static_cast<std::int64_t>(n1_ + n2_ + 1);

    const std::size_t nodes = n1_ + n2_ + 1;
    flow_.assign(arc_count(), 0.0);
    state_.assign(arc_count(), kLower);
    parent_.assign(nodes, -1);
    pred_.assign(nodes, 0);
    up_.assign(nodes, 0);
    depth_.assign(nodes, 0);
    pi_.assign(nodes, 0);
    children_.assign(nodes, {});
    child_pos_.assign(nodes, 0);

    // Initial basis: every node hangs from the root by its artificial arc.
    for (std::size_t v = 0; v < n1_ + n2_; ++v) {
        const std::size_t a = n1_ * n2_ + v;
        parent_[v] = root_;
        pred_[v] = a;
        depth_[v] = 1;
        state_[a] = kTree;
        if (v < n1_) {
            up_[v] = 1;
            flow_[a] = supply[v];
            pi_[v] = -art_cost_;
        } else {
            up_[v] = 0;
            flow_[a] = demand[v - n1_];
            pi_[v] = art_cost_;
        }
        add_child(root_, static_cast<int>(v));
    }
    block_size_ = std::max<std::size_t>(10, static_cast<std::size_t>(std::sqrt(static_cast<double>(arc_count()))));
}

int NetworkSimplex::source(std::size_t a) const {
    const std::size_t reg = n1_ * n2_;
    if (a < reg) return static_cast<int>(a / n2_);
    const std::size_t v = a - reg;
    return v < n1_ ? static_cast<int>(v) : root_;
}

int NetworkSimplex::target(std::size_t a) const {
    const std::size_t reg = n1_ * n2_;
    if (a < reg) return static_cast<int>(n1_ + a % n2_);
    const std::size_t v = a - reg;
    return v < n1_ ? root_ : static_cast<int>(v);
}

std::int64_t NetworkSimplex::cost(std::size_t a) const {
    return a < n1_ * n2_ ? cost_[a] : art_cost_;
}

std::int64_t NetworkSimplex::reduced_cost(std::size_t a) const {
    return cost(a) + pi_[source(a)] - pi_[target(a)];
}

void NetworkSimplex::add_child(int p, int c) {
    child_pos_[c] = children_[p].size();
    children_[p].push_back(c);
}

void NetworkSimplex::remove_child(int p, int c) {
    auto& kids = children_[p];
    const std::size_t idx = child_pos_[c];
    const int last = kids.back();
    kids[idx] = last;
    child_pos_[last] = idx;
    kids.pop_back();
}

bool NetworkSimplex::find_entering(std::size_t& arc) {
    const std::size_t m = arc_count();
    std::int64_t best = 0;
    std::size_t cnt = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t a = next_arc_;
        next_arc_ = next_arc_ + 1 == m ? 0 : next_arc_ + 1;
        if (state_[a] == kLower) {
            const std::int64_t rc = reduced_cost(a);
            if (rc < best) {
                best = rc;
                arc = a;
            }
        }
        if (++cnt == block_size_) {
            if (best < 0) return true;
            cnt = 0;
        }
    }
    return best < 0;
}

void NetworkSimplex::pivot(std::size_t in_arc) {
    const int first = source(in_arc);
    const int second = target(in_arc);

    int a = first, b = second;
    while (a != b) {
        if (depth_[a] > depth_[b]) {
            a = parent_[a];
        } else if (depth_[b] > depth_[a]) {
            b = parent_[b];
        } else {
            a = parent_[a];
            b = parent_[b];
        }
    }
    const int join = a;

    // Leaving arc: first blocking arc on the first side (strict), last
    // blocking arc on the second side (non-strict). Only arcs whose flow
    // decreases can block since all capacities are infinite.
    double delta = std::numeric_limits<double>::infinity();
    int u_out = -1;
    int side = 0;
    for (int u = first; u != join; u = parent_[u]) {
        if (up_[u] && flow_[pred_[u]] < delta) {
            delta = flow_[pred_[u]];
            u_out = u;
            side = 1;
        }
    }
    for (int u = second; u != join; u = parent_[u]) {
        if (!up_[u] && flow_[pred_[u]] <= delta) {
            delta = flow_[pred_[u]];
            u_out = u;
            side = 2;
        }
    }
    if (u_out < 0) throw Error("network simplex: unbounded pivot");

    if (delta > 0.0) {
        flow_[in_arc] += delta;
        for (int u = first; u != join; u = parent_[u]) flow_[pred_[u]] += up_[u] ? -delta : delta;
        for (int u = second; u != join; u = parent_[u]) flow_[pred_[u]] += up_[u] ? delta : -delta;
    }

    const int u_in = side == 1 ? first : second;
    const int v_in = side == 1 ? second : first;
    const std::int64_t rc = reduced_cost(in_arc);
    const std::int64_t shift = u_in == target(in_arc) ? rc : -rc;

    state_[pred_[u_out]] = kLower;
    state_[in_arc] = kTree;

    // Detach the subtree at u_out and re-root it at u_in. All path edges are
    // unlinked before relinking, since add_child rewrites child positions.
    path_.clear();
    for (int u = u_in;; u = parent_[u]) {
        path_.push_back(u);
        if (u == u_out) break;
    }
    remove_child(parent_[u_out], u_out);
    for (std::size_t k = 0; k + 1 < path_.size(); ++k) remove_child(path_[k + 1], path_[k]);
    std::size_t carry_arc = pred_[u_in];
    char carry_up = up_[u_in];
    for (std::size_t k = 0; k + 1 < path_.size(); ++k) {
        const int cur = path_[k], next = path_[k + 1];
        const std::size_t next_arc = pred_[next];
        const char next_up = up_[next];
        add_child(cur, next);
        parent_[next] = cur;
        pred_[next] = carry_arc;
        up_[next] = carry_up ? 0 : 1;
        carry_arc = next_arc;
        carry_up = next_up;
    }
    parent_[u_in] = v_in;
    pred_[u_in] = in_arc;
    up_[u_in] = source(in_arc) == u_in ? 1 : 0;
    add_child(v_in, u_in);

    // Potentials of the moved subtree shift by a constant; depths follow v_in.
    stack_.clear();
    stack_.push_back(u_in);
    while (!stack_.empty()) {
        const int u = stack_.back();
        stack_.pop_back();
        pi_[u] += shift;
        depth_[u] = depth_[parent_[u]] + 1;
        for (int c : children_[u]) stack_.push_back(c);
    }
    ++pivots_;
}

void NetworkSimplex::run() {
    std::size_t arc = 0;
    while (find_entering(arc)) pivot(arc);
}

double NetworkSimplex::artificial_flow() const {
    double s = 0.0;
    for (std::size_t a = n1_ * n2_; a < arc_count(); ++a) s += flow_[a];
    return s;
}

}  // namespace vpstab::detail
