#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

// Deterministic randomness helpers. std::mt19937_64's raw output stream is
// fully specified by the standard, but the std distribution adapters are
// implementation-defined, so anything that must reproduce bit-for-bit across
// platforms draws through the helpers below instead.

namespace qdt {

// 64-bit FNV-1a of a byte string; stable across platforms unlike std::hash.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// SplitMix64 finalizer; spreads seed material over all 64 bits.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from up to three components
// (run seed, subject hash, replicate index).
inline std::uint64_t combine_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
    std::uint64_t h = mix64(a);
    h = mix64(h ^ (b + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)));
    h = mix64(h ^ (c + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)));
    return h;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(mix64(seed));
}

// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection; n must be nonzero.
inline std::uint64_t uniform_below(std::mt19937_64& g, std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
        x = g();
    } while (x >= limit);
    return x % n;
}

// In-place Fisher-Yates shuffle using uniform_below.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_below(g, i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace qdt
