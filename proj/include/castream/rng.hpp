#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace castream {

// All randomness in the project flows through this generator. The standard
// <random> distributions are implementation-defined, so to keep seeded runs
// byte-identical across toolchains we generate uniforms and normals by hand
// on top of splitmix64.
inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Folds keys into a seed so independent streams can be derived from one
// experiment seed plus context (window ordinal, purpose tag, ...).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) noexcept {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s ^= key + 0x9e3779b97f4a7c15ull + (s << 6) + (s >> 2);
  return a ^ splitmix64(s);
}

inline std::uint64_t hash_ints(std::uint64_t seed, std::span<const int> values) noexcept {
  std::uint64_t h = seed;
  for (int v : values) {
    h = mix_seed(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(v)) + 0x51ed270b);
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // burn a step so that seed 0 does not emit 0 first
    splitmix64(state_);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Box-Muller without the cached spare: one normal consumes two uniforms,
  // which keeps the draw sequence a pure function of the call ordinal.
  double normal(double mean, double stddev) {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double mag = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * mag * std::cos(6.283185307179586476925286766559 * u2);
  }

  // integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

 private:
  std::uint64_t state_;
};

}  // namespace castream
