#pragma once

#include <span>

#include "psp/vecstore.hpp"

namespace psp {

// Row-major K-nearest-neighbor lists over L2, each row ascending by distance
// (ties toward smaller id), self excluded.
struct KnnGraph {
  uint32_t K = 0;
  size_t n = 0;
  std::vector<uint32_t> ids;
  std::vector<float> dists;

  std::span<const uint32_t> row(size_t i) const { return {ids.data() + i * K, K}; }
  std::span<const float> row_dists(size_t i) const { return {dists.data() + i * K, K}; }
};

KnnGraph build_exact_knn(const VectorStore& store, uint32_t K, int threads = 0);

struct NnDescentParams {
  uint32_t iters = 12;
  double sample_rate = 0.3;
  uint64_t seed = 1;
  int threads = 0;
  // converged when an iteration's accepted pool updates drop below this
  // fraction of n*K
  double delta = 0.001;
  uint32_t accuracy_sample = 500;  // rows checked against exact scan
};

struct NnDescentResult {
  KnnGraph graph;
  double acc_at_k = 1.0;  // fraction of exact neighbors recovered on the sample
  uint32_t iters_run = 0;
};

NnDescentResult build_nndescent_knn(const VectorStore& store, uint32_t K,
                                    const NnDescentParams& params);

// cache: magic "KNN1", u64 n, u32 K, ids n*K i32, dists n*K f32
void save_knn_cache(const KnnGraph& g, const std::string& path);
KnnGraph load_knn_cache(const std::string& path);

}  // namespace psp
