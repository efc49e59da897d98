#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace piecehint::rng {

// Named, index-addressable RNG streams. Every random draw in the project
// comes from a stream derived as (seed, label, index), so results do not
// depend on iteration order or worker scheduling.

constexpr std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_stream(std::uint64_t seed, std::string_view label,
                                      std::uint64_t index) {
    std::uint64_t x = splitmix64(seed ^ fnv1a(label));
    return splitmix64(x ^ index);
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::string_view label,
                                   std::uint64_t index) {
    return std::mt19937_64(derive_stream(seed, label, index));
}

// 53-bit uniform in [0, 1). Hand-rolled so draws are identical on every
// platform regardless of the standard library's distribution internals.
inline double uniform01(std::mt19937_64& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Rejection-free multiply-shift is fine here;
// bias is below 2^-53 for the small n used in this project.
inline int uniform_below(std::mt19937_64& engine, int n) {
    return static_cast<int>(uniform01(engine) * static_cast<double>(n));
}

inline bool bernoulli(std::mt19937_64& engine, double p) {
    return uniform01(engine) < p;
}

// Sample an index from an unnormalized non-negative weight vector.
inline int sample_categorical(std::span<const double> weights, std::mt19937_64& engine) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform01(engine) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
}

} // namespace piecehint::rng
