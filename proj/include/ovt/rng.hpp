#pragma once

#include <cstdint>

namespace ovt {

/// splitmix64: the documented seed-split used everywhere in this project so
/// suites reproduce across machines.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97f4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Small deterministic generator (xorshift128+ seeded via splitmix64).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    s0_ = splitmix64(seed);
    s1_ = splitmix64(s0_ ^ 0xD2B74407B1CE6E93ULL);
    if (s0_ == 0 && s1_ == 0) s1_ = 1;
  }

  std::uint64_t next_u64() {
    std::uint64_t x = s0_;
    const std::uint64_t y = s1_;
    s0_ = y;
    x ^= x << 23;
    s1_ = x ^ y ^ (x >> 17) ^ (y >> 26);
    return s1_ + y;
  }

  /// Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi].
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  std::uint64_t s0_ = 0, s1_ = 0;
};

/// Stream ids for per-episode substreams.
enum class RngStream : std::uint64_t {
  noise = 0x6E6F697365ULL,     // perception noise draws
  scenario = 0x7363656EULL,    // per-trial scenario parameter draws
};

inline Rng make_stream(std::uint64_t episode_seed, RngStream stream) {
  return Rng(splitmix64(episode_seed ^ static_cast<std::uint64_t>(stream)));
}

/// Episode k of a suite.
inline std::uint64_t episode_seed(std::uint64_t master_seed, int episode_index) {
  return splitmix64(master_seed + 1 + static_cast<std::uint64_t>(episode_index));
}

}  // namespace ovt
