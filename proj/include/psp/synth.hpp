#pragma once

#include "psp/rng.hpp"
#include "psp/vecstore.hpp"

namespace psp {

enum class SynthKind { gaussian, lognormal, clustered, sphere };

SynthKind synth_kind_from_name(const std::string& s);
const char* synth_kind_name(SynthKind k);

// Deterministic synthetic datasets. Row i is a pure function of (seed, i):
// a per-row SplitMix64 stream feeds Box–Muller normals, so any row can be
// regenerated independently and generation parallelizes cleanly.
//   gaussian   N(0, sigma2·I)
//   lognormal  radius exp(log_sigma·g)·sqrt(sigma2) on a uniform direction
//              (norm-skewed, heavy upper tail)
//   clustered  `centers` Gaussian blobs, centers N(0, (4·sigma)²·I),
//              points center + N(0, sigma2·I)
//   sphere     unit-norm directions
struct SynthSpec {
  SynthKind kind = SynthKind::gaussian;
  size_t n = 0;
  uint32_t d = 0;
  double sigma2 = 1.0;
  double log_sigma = 0.5;   // lognormal only
  uint32_t centers = 16;    // clustered only
  uint64_t seed = 1;
};

VectorStore synth_generate(const SynthSpec& spec);

}  // namespace psp
