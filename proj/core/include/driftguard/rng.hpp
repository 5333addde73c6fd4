#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace driftguard {

/// SplitMix64 finalizer. Used to derive stream seeds and for stateless draws so
/// that every random quantity in the engine is a pure function of explicit seeds.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream seed from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

/// Stateless uniform draw in [0, 1) keyed by (seed, key string, index).
/// The same key always yields the same value, independent of call order.
double keyed_unit_draw(std::uint64_t seed, std::string_view key, std::uint64_t index);

/// Engine type used throughout; always constructed from an explicit seed.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) {
    return Rng(mix64(seed));
}

}  // namespace driftguard
