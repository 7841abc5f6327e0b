#pragma once

#include <cmath>
#include <cstdint>

#include "ivbound/errors.hpp"

namespace ivbound {

// splitmix64: counter-based (state walks a fixed odd gamma, output is a
// bijective finalizer), so independent substreams can be keyed by
// (seed, index) and replicate streams are reproducible across platforms.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
    return SplitMix64(mix(mix(seed + kGamma) + index));
  }

  std::uint64_t next() {
    state_ += kGamma;
    return mix(state_);
  }

  // uniform on [0, 1), 53 random bits
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform on {0, ..., n-1}, unbiased via modulo rejection
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) fail(ErrorCode::InvalidArgument, "next_below: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;
    std::uint64_t x = next();
    while (x < threshold) x = next();
    return x % n;
  }

  // standard normal via Box-Muller, second draw cached
  double next_gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double a = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ivbound
