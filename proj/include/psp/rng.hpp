#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace psp {

// SplitMix64 finalizer. All randomness in the project flows through this so
// that any (seed, stream, counter) triple regenerates identically anywhere.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based generator: draw i of stream s under seed k is a pure function
// of (k, s, i). Stateless `at()` supports deterministic parallel generation;
// `next()` gives the same sequence for convenience in serial code.
struct CounterRng {
  uint64_t base;
  uint64_t ctr = 0;

  explicit CounterRng(uint64_t seed, uint64_t stream = 0)
      : base(splitmix64(splitmix64(seed) ^ splitmix64(0x5851f42d4c957f2dULL ^ stream))) {}

  uint64_t at(uint64_t counter) const { return splitmix64(base ^ (counter * 0x2545f4914f6cdd1dULL + 0x9e3779b97f4a7c15ULL)); }
  uint64_t next() { return at(ctr++); }

  // uniform in [0, bound), bound > 0
  uint32_t next_below(uint32_t bound) { return static_cast<uint32_t>((static_cast<__uint128_t>(next() >> 32) * bound) >> 32); }

  // uniform in [0,1) with 53 random bits
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // standard normal via Box–Muller (explicit so regeneration is portable)
  double next_gaussian() {
    double u1 = next_double(), u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
};

// k distinct values in [0, n), ascending. Floyd's algorithm is O(k) draws but
// needs a set; for small k relative to n a simple redraw loop is fine and
// deterministic, so keep that.
inline std::vector<uint32_t> sample_distinct(CounterRng& rng, uint32_t n, uint32_t k) {
  std::vector<uint32_t> out;
  if (k >= n) {
    out.resize(n);
    for (uint32_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }
  out.reserve(k);
  std::vector<bool> taken(n, false);
  while (out.size() < k) {
    uint32_t v = rng.next_below(n);
    if (!taken[v]) {
      taken[v] = true;
      out.push_back(v);
    }
  }
  return out;
}

}  // namespace psp
