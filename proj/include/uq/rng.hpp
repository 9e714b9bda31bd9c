#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "uq/errors.hpp"

// Deterministic randomness for the whole artifact.
//
// Stream discipline: every seeded operation owns a freshly constructed
// std::mt19937_64 (the standard fixes its output sequence, so results are
// identical across platforms). Distributions from <random> are NOT used
// because their mapping from raw bits is implementation-defined; the bounded
// draw and unit-interval draw below are specified here instead.

namespace uq {

// SplitMix64 finalizer. Used for seed derivation and cheap string/int mixing.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ mix64(b));
}

// FNV-1a, for deterministic text hashing (stub providers, cache-independent ids).
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    // Uniform integer in [0, n) by rejection sampling; unbiased and portable.
    std::uint64_t bounded(std::uint64_t n) {
        if (n == 0) throw InvalidInputError("bounded draw with n = 0");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 gen_;
};

// Uniform random k-subset of [0, m) via partial Fisher-Yates, returned sorted.
inline std::vector<int> random_k_subset(int m, int k, Rng& rng) {
    if (k < 0 || k > m) throw InvalidInputError("k-subset with k out of range");
    std::vector<int> idx(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < k; ++i) {
        const auto j = i + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(m - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(k));
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace uq
