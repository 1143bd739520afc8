#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hubersl {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic child seed for a task identified by `path` under `base`.
/// Distinct paths give statistically independent streams.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

}  // namespace hubersl
