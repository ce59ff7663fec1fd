#include "psp/synth.hpp"

#include <cmath>

namespace psp {

SynthKind synth_kind_from_name(const std::string& s) {
  if (s == "gaussian") return SynthKind::gaussian;
  if (s == "lognormal") return SynthKind::lognormal;
  if (s == "clustered") return SynthKind::clustered;
  if (s == "sphere") return SynthKind::sphere;
  throw DataError("InvalidParam: unknown synth kind '" + s + "'");
}

const char* synth_kind_name(SynthKind k) {
  switch (k) {
    case SynthKind::gaussian: return "gaussian";
    case SynthKind::lognormal: return "lognormal";
    case SynthKind::clustered: return "clustered";
    case SynthKind::sphere: return "sphere";
  }
  return "?";
}

VectorStore synth_generate(const SynthSpec& spec) {
  if (spec.n == 0 || spec.d == 0) throw DataError("InvalidParam: synth needs n > 0 and d > 0");
  if (spec.sigma2 <= 0) throw DataError("InvalidParam: sigma2 must be positive");
  if (spec.kind == SynthKind::clustered && spec.centers == 0)
    throw DataError("InvalidParam: clustered synth needs centers > 0");

  const double sigma = std::sqrt(spec.sigma2);
  VectorStore store;
  store.dim = spec.d;
  store.data.resize(spec.n * spec.d);

  // Cluster centers come from a dedicated stream so they are shared by all rows.
  std::vector<float> centers;
  if (spec.kind == SynthKind::clustered) {
    centers.resize(static_cast<size_t>(spec.centers) * spec.d);
    CounterRng crng(spec.seed, 0xC0FFEEULL);
    for (auto& c : centers) c = static_cast<float>(4.0 * sigma * crng.next_gaussian());
  }

#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(spec.n); ++i) {
    CounterRng rng(spec.seed, static_cast<uint64_t>(i) + 1);
    float* out = store.data.data() + static_cast<size_t>(i) * spec.d;
    switch (spec.kind) {
      case SynthKind::gaussian: {
        for (uint32_t j = 0; j < spec.d; ++j)
          out[j] = static_cast<float>(sigma * rng.next_gaussian());
        break;
      }
      case SynthKind::sphere:
      case SynthKind::lognormal: {
        double norm2 = 0.0;
        std::vector<double> g(spec.d);
        for (uint32_t j = 0; j < spec.d; ++j) {
          g[j] = rng.next_gaussian();
          norm2 += g[j] * g[j];
        }
        double norm = std::sqrt(norm2);
        if (norm < 1e-12) {
          g[0] = 1.0;
          norm = 1.0;
        }
        double radius = 1.0;
        if (spec.kind == SynthKind::lognormal)
          radius = sigma * std::exp(spec.log_sigma * rng.next_gaussian());
        for (uint32_t j = 0; j < spec.d; ++j)
          out[j] = static_cast<float>(radius * g[j] / norm);
        break;
      }
      case SynthKind::clustered: {
        uint32_t c = rng.next_below(spec.centers);
        const float* center = centers.data() + static_cast<size_t>(c) * spec.d;
        for (uint32_t j = 0; j < spec.d; ++j)
          out[j] = static_cast<float>(center[j] + sigma * rng.next_gaussian());
        break;
      }
    }
  }
  store.finalize();
  return store;
}

}  // namespace psp
