#pragma once

#include <cstdint>
#include <random>
#include <vector>
#include <cmath>

namespace wsaug {

// splitmix64 step; used for seed derivation only, never as the main generator.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Derives a decorrelated child seed from a base seed and up to three stream
/// identifiers (sample id, epoch, step index, ...). Pure function; the same
/// inputs always map to the same seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = base;
    std::uint64_t h = splitmix64_next(s);
    s ^= a;
    h ^= splitmix64_next(s);
    s ^= b;
    h ^= splitmix64_next(s);
    s ^= c;
    h ^= splitmix64_next(s);
    return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// exp of a uniform draw on [ln lo, ln hi]; lo and hi must be positive.
inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::exp(uniform_real(rng, std::log(lo), std::log(hi)));
}

/// Fisher-Yates; uniform over all n! orderings. perm[j] is the new position
/// of element j under the convention used by PermutationSequence.
inline std::vector<int> random_permutation(int n, std::mt19937_64& rng) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    for (int i = n - 1; i > 0; --i) {
        int j = uniform_int(rng, 0, i);
        std::swap(p[i], p[j]);
    }
    return p;
}

} // namespace wsaug
