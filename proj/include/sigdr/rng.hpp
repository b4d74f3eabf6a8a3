#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sigdr {

// splitmix64 finalizer; used to derive statistically independent streams
// from a base seed and stream indices.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(mix64(mix64(seed) ^ mix64(stream + 0x51ed2701)));
}

inline std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return std::mt19937_64(mix64(mix64(seed) ^ mix64(a + 0x51ed2701) ^ mix64(b + 0xa076bb1f)));
}

// Uniform in [0,1) from the top 53 bits. The standard distributions are
// implementation-defined; these are pinned so seeded runs reproduce.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Marsaglia polar method, one variate per call (the spare is discarded to
// keep draw counts predictable).
inline double gaussian(std::mt19937_64& rng) {
  double u, v, s;
  do {
    u = 2.0 * uniform01(rng) - 1.0;
    v = 2.0 * uniform01(rng) - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

}  // namespace sigdr
