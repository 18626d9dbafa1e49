#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "sessrl/errors.hpp"

namespace sessrl {

/// Deterministic random source. mt19937_64 has a standardized output sequence,
/// and all distribution transforms are implemented here rather than with
/// std:: distributions (whose algorithms are implementation-defined), so the
/// same seed yields the same stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). Rejection sampling, unbiased.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw ConfigError("Rng::below requires n > 0");
        const std::uint64_t mod = (UINT64_MAX % n + 1) % n; // 2^64 mod n
        for (;;) {
            const std::uint64_t x = next_u64();
            if (mod == 0 || x < UINT64_MAX - mod + 1) return x % n;
        }
    }

    bool bernoulli(double p) { return uniform01() < p; }

    double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

    /// Fisher-Yates shuffle driven by below(), deterministic for a given seed.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Index sampled from an (unnormalized) cumulative weight table.
    std::size_t sample_cdf(const std::vector<double>& cdf) {
        const double u = uniform01() * cdf.back();
        std::size_t lo = 0, hi = cdf.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (cdf[mid] <= u) lo = mid + 1; else hi = mid;
        }
        return lo;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace sessrl
