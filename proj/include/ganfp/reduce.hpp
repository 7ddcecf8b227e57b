#pragma once

#include <cstddef>
#include <span>

namespace ganfp {

namespace detail {
inline constexpr std::size_t kPairwiseBlock = 64;
}

/// Pairwise (tree) summation of term(0) + ... + term(n-1) in double.
/// The tree shape depends only on n, so results are reproducible.
template <class Term>
double pairwise_sum(std::size_t first, std::size_t last, const Term& term) {
    const std::size_t n = last - first;
    if (n <= detail::kPairwiseBlock) {
        double acc = 0.0;
        for (std::size_t i = first; i < last; ++i) acc += static_cast<double>(term(i));
        return acc;
    }
    const std::size_t mid = first + n / 2;
    return pairwise_sum(first, mid, term) + pairwise_sum(mid, last, term);
}

template <class Term>
double pairwise_sum(std::size_t n, const Term& term) {
    return pairwise_sum(std::size_t{0}, n, term);
}

template <class T>
double pairwise_sum(std::span<const T> values) {
    return pairwise_sum(values.size(), [&](std::size_t i) { return values[i]; });
}

template <class T>
double mean_of(std::span<const T> values) {
    return values.empty() ? 0.0 : pairwise_sum(values) / static_cast<double>(values.size());
}

}  // namespace ganfp
