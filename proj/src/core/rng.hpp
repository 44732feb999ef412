#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "core/errors.hpp"

namespace frugal {

// Deterministic RNG used everywhere seeds appear in the public surface.
// std::mt19937_64 gives a portable bit stream; the distributions below are
// hand-rolled because the standard ones are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    std::uint64_t uniform_below(std::uint64_t n) {
        // Rejection sampling keeps the draw exactly uniform.
        std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v = gen_();
        while (v >= limit) v = gen_();
        return v % n;
    }

    // Standard normal via Box-Muller (cached spare).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    std::vector<double> normal_vector(std::size_t n) {
        std::vector<double> out(n);
        for (auto& x : out) x = normal();
        return out;
    }

    // k distinct values from [0, n), ascending.
    std::vector<long> sample_without_replacement(long n, long k) {
        if (k < 0 || k > n) throw ParameterError("sample_without_replacement: k out of range");
        // Partial Fisher-Yates over an index pool.
        std::vector<long> pool(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
        for (long i = 0; i < k; ++i) {
            long j = i + static_cast<long>(uniform_below(static_cast<std::uint64_t>(n - i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        std::vector<long> out(pool.begin(), pool.begin() + k);
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Mixes a base seed with a stream index so sub-streams are independent.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace frugal
