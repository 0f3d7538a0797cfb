#pragma once

#include <cmath>
#include <cstdint>

namespace colgrid {

// splitmix64; fixed forever so seeded outputs stay stable across releases.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Deterministic generator. All randomness in the project flows from a single
/// user seed through Rng::derive so reruns are bit-identical.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // 128-bit multiply avoids modulo bias.
    const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(wide >> 64);
  }

  /// Standard normal via Box-Muller (implemented here so draws do not depend
  /// on the standard library's distribution internals).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Derives an independent stream from (seed, stream, index).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    std::uint64_t s = seed ^ (0xD6E8FEB86659FD93ull * (stream + 1));
    (void)splitmix64_next(s);
    s ^= 0xA5A5A5A5A5A5A5A5ull * (index + 1);
    (void)splitmix64_next(s);
    return s;
  }

 private:
  std::uint64_t state_;
  double spare_{0.0};
  bool has_spare_{false};
};

// Fixed stream ids for Rng::derive.
namespace streams {
inline constexpr std::uint64_t kSynth = 1;
inline constexpr std::uint64_t kModelInit = 2;
inline constexpr std::uint64_t kTrainShuffle = 3;
inline constexpr std::uint64_t kRollout = 4;
inline constexpr std::uint64_t kHoldout = 5;
}  // namespace streams

}  // namespace colgrid
