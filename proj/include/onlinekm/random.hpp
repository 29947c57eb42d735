#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

namespace onlinekm {

/*
    Reproducible randomness.

    Engine: MT19937-64 (std::mt19937_64), whose output sequence is fixed by the
    C++ standard. The standard distributions are not portable across library
    implementations, so every draw goes through the conversions below:

      uniform01  = (next() >> 11) * 2^-53                      in [0, 1)
      normal     = Box-Muller, cos branch, one pair per draw   u1 in (0, 1]

    Stateless draws (coreset sampling) use SplitMix64 as a counter hash.
*/

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline double bits_to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Uniform [0,1) derived from a seed and an ordered tuple of counters.
inline double counter_uniform(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) noexcept {
    std::uint64_t h = splitmix64(seed);
    for (auto c : counters) h = splitmix64(h ^ splitmix64(c));
    return bits_to_unit(h);
}

// Derives an independent child seed, e.g. one per restart or per run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    double uniform01() { return bits_to_unit(engine_()); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n) by rejection on the top bits.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do { x = engine_(); } while (x >= limit);
        return x % n;
    }

    double normal(double mean, double stddev) {
        const double u1 = 1.0 - uniform01();
        const double u2 = uniform01();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        return mean + stddev * z;
    }

    // Index drawn proportionally to nonnegative weights. Requires a positive sum.
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double r = uniform01() * total;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] <= 0.0) continue;
            last_positive = i;
            if (r < weights[i]) return i;
            r -= weights[i];
        }
        return last_positive;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace onlinekm
