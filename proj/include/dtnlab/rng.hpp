#pragma once

#include <cstdint>

namespace dtnlab {

// Counter-based pseudo-randomness. Draws are pure functions of (seed, counters),
// so parallel loops and re-orderings cannot change experiment outputs.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return hash_mix(hash_mix(a, b), c);
}

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  return hash_mix(hash_mix(a, b, c), d);
}

/// Uniform in [0, 1) from a hashed counter.
inline double uniform01(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

/// Uniform in [-1, 1).
inline double uniform_pm1(std::uint64_t h) { return 2.0 * uniform01(h) - 1.0; }

/// Small sequential generator for test drivers and sweeps.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {}
  std::uint64_t next() { return state_ = splitmix64(state_); }
  double uniform() { return uniform01(next()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double pm1() { return uniform_pm1(next()); }

 private:
  std::uint64_t state_;
};

}  // namespace dtnlab
