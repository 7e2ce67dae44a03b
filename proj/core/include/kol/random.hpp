#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace kol {

/// Uniform draw in [lo, hi) from 53 random bits; unlike std:: distributions the
/// mapping is fixed, so sequences match across standard libraries.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

/// Standard normal draw (Box-Muller, one value per call).
inline double normal(std::mt19937_64& rng) {
  double u1 = uniform(rng, 0.0, 1.0);
  while (u1 <= 0.0) u1 = uniform(rng, 0.0, 1.0);
  const double u2 = uniform(rng, 0.0, 1.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Independent child seed for item `index` of a seeded collection.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace kol
