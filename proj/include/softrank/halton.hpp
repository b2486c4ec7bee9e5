#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "softrank/core.hpp"

namespace softrank {

inline constexpr Index kMaxHaltonDimension = 512;

/// The first `count` primes, computed once by sieve.
inline const std::vector<int>& first_primes() {
    static const std::vector<int> primes = [] {
        // The 512th prime is 3671.
        constexpr int limit = 3700;
        std::vector<bool> composite(limit + 1, false);
        std::vector<int> out;
        for (int p = 2; p <= limit && static_cast<Index>(out.size()) < kMaxHaltonDimension; ++p) {
            if (composite[p]) continue;
            out.push_back(p);
            for (int q = p * p; q <= limit; q += p) composite[q] = true;
        }
        return out;
    }();
    return primes;
}

/// Van der Corput radical inverse of `index` in `base`; lies in [0, 1).
inline double radical_inverse(std::uint64_t index, int base) {
    const double inv_base = 1.0 / base;
    double scale = inv_base;
    double result = 0.0;
    while (index > 0) {
        result += static_cast<double>(index % static_cast<std::uint64_t>(base)) * scale;
        index /= static_cast<std::uint64_t>(base);
        scale *= inv_base;
    }
    return result;
}

/// Halton point set used as the discrete uniform reference measure of rank maps.
struct HaltonGrid {
    Matrix points;            // m x d, each coordinate in [0, 1)
    std::vector<int> bases;   // the first d primes
    std::int64_t start_index = 1;

    Index size() const { return points.rows(); }
    Index dimension() const { return points.cols(); }
};

/// Row i, column j is the radical inverse of (start_index + i) in the j-th prime.
/// The default offset skips index 0, which would put a point at the origin.
inline HaltonGrid halton(Index m, Index d, std::int64_t start_index = 1) {
    if (m < 1 || d < 1) throw InvalidInput("halton: need m >= 1 and d >= 1");
    if (start_index < 0) throw InvalidInput("halton: start_index must be nonnegative");
    if (d > kMaxHaltonDimension)
        throw UnsupportedDimension("halton: dimension " + std::to_string(d) + " exceeds prime table (" +
                                   std::to_string(kMaxHaltonDimension) + ")");
    const auto& primes = first_primes();
    HaltonGrid grid;
    grid.start_index = start_index;
    grid.bases.assign(primes.begin(), primes.begin() + d);
    grid.points.resize(m, d);
    for (Index j = 0; j < d; ++j)
        for (Index i = 0; i < m; ++i)
            grid.points(i, j) = radical_inverse(static_cast<std::uint64_t>(start_index + i), grid.bases[j]);
    return grid;
}

}  // namespace softrank
