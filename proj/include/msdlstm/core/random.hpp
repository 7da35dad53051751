#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "msdlstm/core/tensor.hpp"

namespace msd {

// Seeded streams and the draws below give identical sequences on every
// conforming toolchain.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent stream `stream` of the generator family identified by `seed`.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ull)));
}

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) { return rng() % n; }

inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Zero-mean uniform fill with bound sqrt(6 / (fan_in + fan_out)).
inline void xavier_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<Real>(uniform(rng, -bound, bound));
}

}  // namespace msd
