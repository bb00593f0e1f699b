#pragma once

#include <cmath>
#include <cstdint>

namespace speclab {

/// Counter-based pseudorandom generator.
///
/// Each draw hashes (seed, counter++) through a SplitMix64-style finalizer,
/// so a stream is fully determined by its 64-bit seed and can be split by
/// deriving child seeds. Per-trial streams are derived as seed ^ trial index;
/// independent substreams within a trial use substream().
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() { return mix(seed_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal via Box-Muller; values are produced in pairs.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.28318530717958647692 * u2;
    spare_ = mag * std::sin(ang);
    have_spare_ = true;
    return mag * std::cos(ang);
  }

  /// Derives an independent stream keyed by `tag`, without disturbing this one.
  CounterRng substream(std::uint64_t tag) const {
    return CounterRng(mix(seed_ ^ mix(tag + 0x632BE59BD9B4E019ULL)));
  }

  std::uint64_t seed() const { return seed_; }

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Stream seed for trial `t` of a study with base seed `seed`.
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t t) { return seed ^ t; }

}  // namespace speclab
