#pragma once

#include <cstddef>
#include <span>

namespace vpstab {

/// Sum in a fixed pairwise tree over index order. The tree depends only on
/// the length, so the result is bit-reproducible regardless of threading.
inline double pairwise_sum(std::span<const double> v) {
    constexpr std::size_t kLeaf = 16;
    if (v.size() <= kLeaf) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace vpstab
