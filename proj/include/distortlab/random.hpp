#pragma once

#include <cstdint>
#include <random>

namespace distortlab {

using Rng = std::mt19937_64;

/// One SplitMix64 step.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of the stream for work item `index` under `master`:
///   splitmix64(master ^ splitmix64(index + 1)).
/// Every Monte Carlo task draws from its own derived stream, so results do
/// not depend on how tasks are scheduled.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 1));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t index) {
    return Rng(derive_seed(master, index));
}

}  // namespace distortlab
