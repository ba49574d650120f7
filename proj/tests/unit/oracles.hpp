#pragma once

// Reference implementations used only by the tests. They follow the
// definitions directly and share no code with the library beyond the vertex
// encoding.

#include <cstdint>
#include <cstdlib>
#include <vector>

#include "tdz/lattice.hpp"

namespace tdz_test {

// L(x) from the branch digits: j = length of the prefix that follows the
// ray, then the nearest ray vertex has level -j and x sits |x| - j above it.
inline std::int64_t level_by_digits(const tdz::Lattice& lat, tdz::TreeVertex x, std::uint32_t ray = 0) {
    const auto digits = lat.branches(x);
    std::int64_t j = 0;
    while (j < static_cast<std::int64_t>(digits.size()) && digits[static_cast<std::size_t>(j)] == ray) ++j;
    return -j + (static_cast<std::int64_t>(digits.size()) - j);
}

// |B_T(r)| for degree d, by summing sphere sizes.
inline std::uint64_t tree_ball(int d, int r) {
    if (r < 0) return 0;
    std::uint64_t total = 1, sphere = 1;
    for (int n = 1; n <= r; ++n) {
        sphere = (n == 1) ? static_cast<std::uint64_t>(d) : sphere * static_cast<std::uint64_t>(d - 1);
        total += sphere;
    }
    return total;
}

// ProductBall(k) = {(x, j) : |x| + |j| <= k}: vertices layer by layer, tree
// edges inside each layer, line edges between consecutive layers where both
// ends fit.
inline std::pair<std::uint64_t, std::uint64_t> product_ball_counts(int d, int k) {
    std::uint64_t v = 0, e = 0;
    for (int j = -k; j <= k; ++j) {
        const std::uint64_t layer = tree_ball(d, k - std::abs(j));
        v += layer;
        e += layer - 1;
    }
    for (int j = -k; j < k; ++j) e += tree_ball(d, k - std::max(std::abs(j), std::abs(j + 1)));
    return {v, e};
}

}  // namespace tdz_test
