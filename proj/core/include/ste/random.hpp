#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ste {

/// Every stochastic operation takes an explicit stream of this type.
using Rng = std::mt19937_64;

/// Mixes a base seed with two stream coordinates (splitmix64 finalizer).
/// Distinct (a, b) pairs give statistically independent streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

/// FNV-1a of a label, for turning names into stream coordinates.
std::uint64_t hash_label(std::string_view label);

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace ste
