#pragma once

#include <cstddef>
#include <span>

namespace impctl {

/// Pairwise (tree) summation; the reduction order depends only on the length.
template <typename Scalar>
Scalar pairwise_sum(std::span<const Scalar> values) {
    if (values.empty()) return Scalar(0);
    if (values.size() == 1) return values[0];
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

/// Leaf index j of a depth-N tree has level-k ancestor j >> (N - k).
inline std::ptrdiff_t ancestor(std::ptrdiff_t leaf, int depth, int level) { return leaf >> (depth - level); }

}  // namespace impctl
