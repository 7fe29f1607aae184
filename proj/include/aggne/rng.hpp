#pragma once

#include <cstdint>

namespace aggne {

// Counter-based random stream built on the SplitMix64 mixer.
//
// A stream is identified by a 64-bit base key; draws walk a counter through
// the mixer, and fork(key) derives a child stream from the base key alone.
// Forking is therefore independent of how many values the parent has already
// produced, which lets callers pin substreams to explicit coordinates such as
// (trial, iteration, player) and reproduce them in any evaluation order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : base_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  RngStream fork(std::uint64_t key) const {
    return RngStream(raw_tag{}, mix(base_ ^ mix(key + kGamma)));
  }

  std::uint64_t next_u64() { return mix(base_ + kGamma * ++ctr_); }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  struct raw_tag {};
  RngStream(raw_tag, std::uint64_t base) : base_(base) {}

  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t base_;
  std::uint64_t ctr_ = 0;
};

}  // namespace aggne
