#pragma once

#include "onlinekm/error.hpp"
#include "onlinekm/geometry.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace onlinekm {

// Number of grid steps per axis: floor(1/delta), tolerant of 1/0.1 = 10.000000000000002.
inline std::size_t grid_steps(double delta) {
    if (!(delta > 0.0 && delta <= 1.0)) throw InvalidInput("grid spacing must lie in (0,1]");
    return static_cast<std::size_t>(std::floor(1.0 / delta + 1e-9));
}

// Sites { i*delta : 0 <= i <= 1/delta }^d in lexicographic order (first axis most significant).
inline std::vector<Point> grid_sites(double delta, std::size_t d) {
    const std::size_t per_axis = grid_steps(delta) + 1;
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) {
        if (total > std::numeric_limits<std::size_t>::max() / per_axis) throw ResourceError("grid site count overflows");
        total *= per_axis;
    }
    std::vector<Point> sites;
    sites.reserve(total);
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t n = 0; n < total; ++n) {
        std::vector<double> c(d);
        for (std::size_t a = 0; a < d; ++a) c[a] = std::min(1.0, static_cast<double>(idx[a]) * delta);
        sites.emplace_back(std::move(c));
        for (std::size_t a = d; a-- > 0;) {
            if (++idx[a] < per_axis) break;
            idx[a] = 0;
        }
    }
    return sites;
}

// Exact binomial coefficient; saturates at uint64 max.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        const std::uint64_t num = n - k + i;
        // r * num / i is exact at every step; guard the multiplication.
        const std::uint64_t g = std::gcd(r, i);
        const std::uint64_t r1 = r / g;
        const std::uint64_t i1 = i / g;
        const std::uint64_t num1 = num / i1;
        if (r1 != 0 && num1 > std::numeric_limits<std::uint64_t>::max() / r1) {
            return std::numeric_limits<std::uint64_t>::max();
        }
        r = r1 * num1;
    }
    return r;
}

// Visits all k-subsets of {0..n-1} in lexicographic order.
template <class Fn>
void for_each_combination(std::size_t n, std::size_t k, Fn&& fn) {
    if (k > n) return;
    std::vector<std::size_t> c(k);
    for (std::size_t i = 0; i < k; ++i) c[i] = i;
    while (true) {
        fn(static_cast<const std::vector<std::size_t>&>(c));
        std::size_t i = k;
        while (i > 0 && c[i - 1] == n - k + (i - 1)) --i;
        if (i == 0) return;
        ++c[i - 1];
        for (std::size_t j = i; j < k; ++j) c[j] = c[j - 1] + 1;
    }
}

} // namespace onlinekm
