#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace vpstab::detail {

/// Primal network simplex for the uncapacitated transportation problem on a
/// complete bipartite graph with integer arc costs and real supplies.
///
/// The basis is kept strongly feasible (Cunningham's leaving-arc rule), which
/// rules out cycling on degenerate pivots. Entering arcs are chosen by block
/// search over the arc list.
class NetworkSimplex {
public:
    /// `costs` is row-major n_sources x n_sinks.
    NetworkSimplex(std::span<const double> supply, std::span<const double> demand, std::vector<std::int64_t> costs);

    void run();

    double flow(std::size_t i, std::size_t j) const { return flow_[i * n2_ + j]; }
    /// Mass left on artificial arcs; nonzero only if supplies and demands differ.
    double artificial_flow() const;
    std::size_t pivots() const noexcept { return pivots_; }

private:
    enum : std::int8_t { kTree = 0, kLower = 1 };

    std::size_t arc_count() const noexcept { return n1_ * n2_ + n1_ + n2_; }
    int source(std::size_t a) const;
    int target(std::size_t a) const;
    std::int64_t cost(std::size_t a) const;
    std::int64_t reduced_cost(std::size_t a) const;

    bool find_entering(std::size_t& arc);
    void pivot(std::size_t in_arc);

    void add_child(int p, int c);
    void remove_child(int p, int c);

    std::size_t n1_, n2_;
    int root_;
    std::vector<std::int64_t> cost_;
    std::int64_t art_cost_;

    std::vector<double> flow_;  // regular arcs then artificial arcs
    std::vector<std::int8_t> state_;

    std::vector<int> parent_;
    std::vector<std::size_t> pred_;
    std::vector<char> up_;  // pred arc points from node to parent
    std::vector<int> depth_;
    std::vector<std::int64_t> pi_;
    std::vector<std::vector<int>> children_;
    std::vector<std::size_t> child_pos_;

    std::size_t block_size_;
    std::size_t next_arc_ = 0;
    std::size_t pivots_ = 0;
    std::vector<int> stack_;
    std::vector<int> path_;
};

}  // namespace vpstab::detail
