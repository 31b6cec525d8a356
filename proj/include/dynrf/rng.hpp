#pragma once

#include <cmath>
#include <cstdint>

namespace dynrf {

// SplitMix64 generator. Fully specified so streams are identical on every
// platform, which the reproducibility contract depends on.
struct Rng {
  uint64_t state = 0;

  Rng() = default;
  explicit Rng(uint64_t seed) : state(seed) {}

  static uint64_t mix(uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  // Independent stream derived from (seed, stream, index); used to give each
  // ray its own generator so parallel evaluation order cannot matter.
  static Rng derive(uint64_t seed, uint64_t stream, uint64_t index) {
    uint64_t s = mix(seed + 0x9e3779b97f4a7c15ull * (stream + 1));
    s = mix(s + 0x9e3779b97f4a7c15ull * (index + 1));
    return Rng(s);
  }

  uint64_t next_u64() {
    state += 0x9e3779b97f4a7c15ull;
    return mix(state);
  }

  // Uniform in [0,1) with 53 random bits.
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Unbiased integer in [0, bound) via rejection.
  uint64_t next_below(uint64_t bound) {
    const uint64_t threshold = -bound % bound;
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Box-Muller; draws two uniforms per call.
  double normal() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
};

}  // namespace dynrf
