#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace spikefield {

// Seeded random stream with reproducibility guarantees: the engine is
// std::mt19937_64 (bit-exact by the standard) and all variate conversions
// are done here by inverse transform, so the same seed and call sequence
// produce the same doubles on every platform.
//
// split(child_id) derives an independent substream from the stream's seed
// without consuming parent state; splitting twice with the same id yields
// the same substream, which is what deterministic worker dispatch wants.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(mix(mix(seed) ^ kInitTweak)) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Exponential with the given rate (mean 1/rate).
  double exponential(double rate) {
    // uniform() < 1 strictly, so log1p argument stays in (-1, 0].
    return -std::log1p(-uniform()) / rate;
  }

  RngStream split(std::uint64_t child_id) const {
    return RngStream(mix(seed_ + kGolden * (child_id + 1)));
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
  static constexpr std::uint64_t kInitTweak = 0x6a09e667f3bcc909ull;

  // splitmix64 finalizer.
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace spikefield
