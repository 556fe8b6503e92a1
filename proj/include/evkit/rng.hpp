#pragma once

#include <cmath>
#include <cstdint>
#include <random>

// Draw helpers on top of mt19937_64. The standard distribution objects are
// implementation-defined, so every sampled value here goes through these
// fixed recipes instead; a given seed then yields the same byte stream on
// any platform with the same libm.

namespace evk::rng {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Stable per-item seed derived from (master seed, item index).
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ull));
}

// Uniform double in [0, 1), 53 mantissa bits.
inline double uniform_unit(std::mt19937_64& g) {
    return double(g() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Rejection keeps the draw exactly uniform.
inline uint64_t uniform_below(std::mt19937_64& g, uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = g();
    while (v >= limit) v = g();
    return v % n;
}

inline double uniform_range(std::mt19937_64& g, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(g);
}

// Exact Poisson sample via unit-rate exponential increments; O(lambda).
inline int64_t poisson(std::mt19937_64& g, double lambda) {
    if (!(lambda > 0)) return 0;
    int64_t k = 0;
    double acc = -std::log(1.0 - uniform_unit(g));
    while (acc <= lambda) {
        ++k;
        acc += -std::log(1.0 - uniform_unit(g));
    }
    return k;
}

}  // namespace evk::rng
