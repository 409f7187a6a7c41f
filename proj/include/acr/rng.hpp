// Seeding and draw helpers. All randomness in the toolkit flows through
// these so runs are reproducible for a fixed seed.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace acr {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Independent stream per (seed, stream) pair; used to split per-song and
// per-purpose randomness.
inline std::mt19937_64 seeded_rng(uint64_t seed, uint64_t stream = 0) {
  uint64_t s = seed ^ (0x9E3779B97F4A7C15ull * (stream + 1));
  uint64_t a = splitmix64(s);
  uint64_t b = splitmix64(s);
  std::seed_seq seq{static_cast<uint32_t>(a), static_cast<uint32_t>(a >> 32),
                    static_cast<uint32_t>(b), static_cast<uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

// Uniform in [0, 1).
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

// Inclusive bounds. Modulo bias is negligible for the small ranges used here.
inline long uniform_int(std::mt19937_64& rng, long lo, long hi) {
  return lo + static_cast<long>(rng() % static_cast<uint64_t>(hi - lo + 1));
}

// Standard normal via Box-Muller (two draws per value, no caching).
inline double gaussian(std::mt19937_64& rng) {
  double u1 = 1.0 - uniform_unit(rng);
  double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace acr
