#pragma once

// Deterministic pseudo-random generation for reproducible experiments.
//
// All stochastic stages in this library draw from xoshiro256** seeded via
// splitmix64, so a fixed 64-bit seed yields the same stream on every run.
// Gaussian variates use the Box-Muller transform (two uniforms per draw,
// no cached state), keeping the stream position independent of call mix.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace tadkit {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// xoshiro256** 1.0 (Blackman & Vigna, public domain reference algorithm).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : state_) w = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  // Standard normal via Box-Muller; consumes exactly two words per draw.
  double gaussian() {
    const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;        // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
};

// Child seed for a named pipeline stage. One user-facing seed fans out into
// independent streams (data synthesis, weight init, batch order, search, ...)
// so partial pipelines stay reproducible.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stage) {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a 64
  for (unsigned char c : stage) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  std::uint64_t s = master ^ h;
  return splitmix64(s);
}

// Stage seed further split by an ordinal (e.g. trial id).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t index) {
  std::uint64_t s = derive_seed(master, stage) ^ (0x9E3779B97F4A7C15ull * (index + 1));
  return splitmix64(s);
}

}  // namespace tadkit
