#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "pcib/errors.hpp"

namespace pcib {

/// 64-bit FNV-1a. Used for content hashes and for deriving sub-seeds;
/// not a cryptographic hash.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64_combine(std::uint64_t h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffu;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Deterministic RNG with hand-rolled distributions.
///
/// std::*_distribution output is implementation-defined, so nothing in
/// this project uses it; every draw below is a fixed function of the
/// mt19937_64 stream and therefore identical across platforms.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1); never exactly 0 (safe for logs).
    double uniform_open() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Modulo reduction; bias is irrelevant at
    /// the ranges used here and determinism is what matters.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw ValidationError("uniform_index: n must be positive");
        return eng_() % n;
    }

    long uniform_int(long lo, long hi) {  // inclusive range
        if (hi < lo) throw ValidationError("uniform_int: empty range");
        return lo + static_cast<long>(uniform_index(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    /// Standard normal via Box-Muller. Consumes exactly two uniforms per call.
    double normal() {
        double u1 = uniform_open();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Gamma with integer shape k: sum of k exponentials.
    double gamma_int(int k) {
        if (k <= 0) throw ValidationError("gamma_int: shape must be positive");
        double acc = 0.0;
        for (int i = 0; i < k; ++i) acc -= std::log(uniform_open());
        return acc;
    }

    /// Beta(a, b) for integer shapes via two gammas.
    double beta(int a, int b) {
        double x = gamma_int(a);
        double y = gamma_int(b);
        return x / (x + y);
    }

    /// Poisson via Knuth's product method; fine for the small lambdas used here.
    long poisson(double lambda) {
        if (lambda < 0) throw ValidationError("poisson: lambda must be non-negative");
        double limit = std::exp(-lambda);
        long k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    /// In-place Fisher-Yates shuffle.
    template <typename Vec>
    void shuffle(Vec& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace pcib
