#include <catch_amalgamated.hpp>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "ivbound/rng.hpp"

using ivbound::SplitMix64;

TEST_CASE("same seed reproduces the stream") {
  SplitMix64 a(20240101), b(20240101);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next() == b.next());
}

TEST_CASE("different seeds diverge") {
  SplitMix64 a(1), b(2);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a.next() == b.next() ? 1 : 0;
  REQUIRE(equal == 0);
}

TEST_CASE("substreams are deterministic and distinct") {
  SplitMix64 s1 = SplitMix64::substream(7, 1);
  SplitMix64 s1b = SplitMix64::substream(7, 1);
  SplitMix64 s2 = SplitMix64::substream(7, 2);
  std::vector<std::uint64_t> a, b, c;
  for (int i = 0; i < 200; ++i) {
    a.push_back(s1.next());
    b.push_back(s1b.next());
    c.push_back(s2.next());
  }
  REQUIRE(a == b);
  REQUIRE(a != c);
}

TEST_CASE("adjacent seeds give unrelated substreams") {
  // substream(seed, k) must not collide with substream(seed+1, k-1) style
  // index shifts; check a small grid of openings for distinctness
  std::set<std::uint64_t> openings;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    for (std::uint64_t k = 0; k < 8; ++k) {
      openings.insert(SplitMix64::substream(seed, k).next());
    }
  }
  REQUIRE(openings.size() == 64);
}

TEST_CASE("unit draws live in [0,1) and look uniform") {
  SplitMix64 rng(99);
  const int n = 100000;
  std::vector<int> bucket(10, 0);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    bucket[static_cast<std::size_t>(u * 10.0)]++;
  }
  REQUIRE(std::abs(sum / n - 0.5) < 0.005);
  for (int count : bucket) {
    REQUIRE(count > 9000);
    REQUIRE(count < 11000);
  }
}

TEST_CASE("bounded draws are unbiased over the range") {
  SplitMix64 rng(4242);
  const std::uint64_t m = 7;
  std::vector<int> counts(m, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t v = rng.next_below(m);
    REQUIRE(v < m);
    counts[v]++;
  }
  for (int c : counts) {
    REQUIRE(c > 9300);   // expected 10000, sd ~ 96
    REQUIRE(c < 10700);
  }
}

TEST_CASE("gaussian draws match first two moments") {
  SplitMix64 rng(31337);
  const int n = 200000;
  double sum = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.next_gauss();
    REQUIRE(std::isfinite(g));
    sum += g;
    ss += g * g;
  }
  const double mean = sum / n;
  const double var = ss / n - mean * mean;
  REQUIRE(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
  REQUIRE(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("substream outputs are frozen") {
  // pinned values guard the stream against accidental algorithm drift;
  // every serialized replicate in the project depends on them
  SplitMix64 s = SplitMix64::substream(20240101, 1);
  REQUIRE(s.next() == 0x019fd0805bcc0eb3ULL);
  REQUIRE(s.next() == 0x9bfe57f17984d710ULL);
  REQUIRE(s.next() == 0x76b95854effe6a68ULL);
  SplitMix64 u = SplitMix64::substream(20240101, 1);
  REQUIRE(u.next_unit() == 0.0063448251128620514);
  REQUIRE(u.next_unit() == 0.60934972424867628);
}

TEST_CASE("state mixing separates nearby seeds") {
  // the finalizer fixes zero; streams never feed it raw zero state
  REQUIRE(SplitMix64::mix(0) == 0);
  REQUIRE(SplitMix64(0).next() != 0);
  REQUIRE(SplitMix64::mix(1) != SplitMix64::mix(0) + 1);
  // adjacent raw states land far apart after mixing
  const std::uint64_t d = SplitMix64::mix(1) ^ SplitMix64::mix(2);
  int bits = 0;
  for (std::uint64_t x = d; x != 0; x >>= 1) bits += static_cast<int>(x & 1);
  REQUIRE(bits >= 16);
}
