#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "psp/common.hpp"

namespace psp {

// Dense float32 vectors, row-major, immutable after load. Inner products and
// squared distances accumulate in float64 with a fixed sequential summation
// order so results are bit-reproducible run to run.
struct VectorStore {
  uint32_t dim = 0;
  std::vector<float> data;   // count * dim
  std::vector<float> norms;  // L2 norm per row, computed once at load

  size_t count() const { return dim == 0 ? 0 : data.size() / dim; }
  const float* row(size_t i) const { return data.data() + i * dim; }

  // Validates finiteness and recomputes the norm cache. Call after filling data.
  void finalize();
};

using QuerySet = VectorStore;

// ---- kernels ------------------------------------------------------------

double inner_product(const float* a, const float* b, size_t d);
double l2_sqr(const float* a, const float* b, size_t d);
double l2_distance(const float* a, const float* b, size_t d);
// cosine with precomputed norms; zero norm on either side yields 0
double cosine_sim(const float* a, const float* b, size_t d, double norm_a, double norm_b);

// Checked variants (DimMismatch) for callers holding two stores.
double inner_product(const VectorStore& s, size_t i, const VectorStore& t, size_t j);
double l2_distance(const VectorStore& s, size_t i, const VectorStore& t, size_t j);

// Per-session distance-computation counter. Every kernel evaluation against a
// base vector during search/eval adds exactly 1.
struct DcCounter {
  uint64_t n = 0;
  void bump() { ++n; }
  void reset() { n = 0; }
};

// metric score where larger is always better (ip: ⟨a,b⟩, l2: −dist, cosine: cos)
double metric_score(Metric m, const float* a, const float* b, size_t d, double norm_a, double norm_b);

// ---- wire formats -------------------------------------------------------
// fvecs: per record [int32 d][d × float32]; bvecs: [int32 d][d × uint8]
// (widened to float32 on load); ivecs: [int32 k][k × int32]. Little-endian.

VectorStore load_fvecs(const std::string& path);
VectorStore load_bvecs(const std::string& path);
void save_fvecs(const VectorStore& store, const std::string& path);

std::vector<std::vector<int32_t>> load_ivecs(const std::string& path);
void save_ivecs(const std::vector<std::vector<int32_t>>& rows, const std::string& path);

// Writes via temp file + rename so readers never observe partial output.
void atomic_write_file(const std::string& path, const void* bytes, size_t len);

}  // namespace psp
