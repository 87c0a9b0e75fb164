#pragma once

#include <cstddef>
#include <span>

namespace kcbo {

// Pairwise (tree) reduction. Keeps ensemble sums stable at J up to 1e5 and
// gives the same bits for serial and parallel drivers since the split points
// depend only on the index range.
template <typename F>
double pairwise_sum(std::size_t begin, std::size_t end, F&& term) {
    const std::size_t n = end - begin;
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i) s += term(i);
        return s;
    }
    const std::size_t mid = begin + n / 2;
    return pairwise_sum(begin, mid, term) + pairwise_sum(mid, end, term);
}

inline double pairwise_sum(std::span<const double> values) {
    return pairwise_sum(0, values.size(), [&](std::size_t i) { return values[i]; });
}

}  // namespace kcbo
