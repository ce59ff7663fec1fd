#include <algorithm>
#include <set>

#include "doctest.h"
#include "psp/rng.hpp"

using namespace psp;

// Known-answer vectors for the canonical SplitMix64 finalizer; the seed-0
// value is the first output of the reference generator's seed-0 sequence.
TEST_CASE("splitmix64 known answers") {
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(0x9e3779b97f4a7c15ULL) == 0x6e789e6aa1b965f4ULL);
  CHECK(splitmix64(1) == 0x910a2dec89025cc1ULL);
  CHECK(splitmix64(42) == 0xbdd732262feb6e95ULL);
  CHECK(splitmix64(0xdeadbeefULL) == 0x4adfb90f68c9eb9bULL);
}

TEST_CASE("counter rng frozen draws") {
  CounterRng rng(42, 7);
  CHECK(rng.base == 0x67e4a9fd23b2116aULL);
  CHECK(rng.at(0) == 0xa3cba0ba640bbaedULL);
  CHECK(rng.at(1) == 0x81d06d06c7e0ad08ULL);
  CHECK(rng.at(2) == 0x0e3bc5ae31d1c25fULL);
}

TEST_CASE("next equals stateless at") {
  CounterRng a(123, 5), b(123, 5);
  for (uint64_t i = 0; i < 100; ++i) CHECK(a.next() == b.at(i));
}

TEST_CASE("streams and seeds are independent") {
  CounterRng a(1, 0), b(1, 1), c(2, 0);
  int diff_ab = 0, diff_ac = 0;
  for (int i = 0; i < 16; ++i) {
    diff_ab += a.at(i) != b.at(i);
    diff_ac += a.at(i) != c.at(i);
  }
  CHECK(diff_ab == 16);
  CHECK(diff_ac == 16);
}

TEST_CASE("next_below stays in range and covers it") {
  CounterRng rng(7, 0);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 20000; ++i) {
    uint32_t v = rng.next_below(10);
    REQUIRE(v < 10);
    counts[v]++;
  }
  // expected 2000 per bucket; 5 sigma ~ 220
  for (int c : counts) CHECK(std::abs(c - 2000) < 300);
}

TEST_CASE("next_double in unit interval, gaussian moments") {
  CounterRng rng(11, 3);
  for (int i = 0; i < 1000; ++i) {
    double u = rng.next_double();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  double sum = 0, sumsq = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double g = rng.next_gaussian();
    sum += g;
    sumsq += g * g;
  }
  double mean = sum / n, var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("sample_distinct basics") {
  CounterRng rng(3, 9);
  auto all = sample_distinct(rng, 5, 5);
  CHECK(all == std::vector<uint32_t>{0, 1, 2, 3, 4});
  auto more = sample_distinct(rng, 5, 9);  // k > n clamps to identity
  CHECK(more == std::vector<uint32_t>{0, 1, 2, 3, 4});

  CounterRng r2(3, 9);
  auto pick = sample_distinct(r2, 1000, 50);
  CHECK(pick.size() == 50);
  std::set<uint32_t> uniq(pick.begin(), pick.end());
  CHECK(uniq.size() == 50);
  for (uint32_t v : pick) CHECK(v < 1000);

  CounterRng r3(3, 9);
  CHECK(sample_distinct(r3, 1000, 50) == pick);  // deterministic
}
