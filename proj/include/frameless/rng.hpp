#pragma once

#include <cstdint>

namespace frameless {

/// SplitMix64 generator (Steele, Lea, Flood 2014). 64-bit state, one
/// multiply-xorshift finalizer per output. Used everywhere randomness is
/// needed so that every run is reproducible from a single 64-bit seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_double() < p; }

  /// Uniform integer in [0, bound). Bound must be positive. Uses rejection
  /// to avoid modulo bias.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  /// The raw SplitMix64 output function, usable as a 64-bit hash.
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Deterministic per-stream seed derivation. Stream index is hashed through
/// the SplitMix64 finalizer twice so consecutive indices land in unrelated
/// regions of the state space; streams for (seed, 0..N) are independent for
/// all practical purposes and identical across runs and thread counts.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream_index) {
  return SplitMix64::mix(master_seed + SplitMix64::mix(stream_index + 0x9E3779B97F4A7C15ull));
}

}  // namespace frameless
