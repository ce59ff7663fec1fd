#pragma once

#include <span>
#include <utility>

#include "psp/vecstore.hpp"

namespace psp {

// Exact top-k answers for a query set, row-major. ids[qi*k + r] is the r-th
// best base id for query qi; scores hold the metric value (larger = better,
// l2 stored as the distance with ordering handled by the scan).
struct GroundTruth {
  uint32_t k = 0;
  size_t count = 0;
  std::vector<int32_t> ids;
  std::vector<float> scores;

  std::span<const int32_t> row(size_t qi) const { return {ids.data() + qi * k, k}; }
};

// Exhaustive scan, ties broken toward the smaller id. Throws KTooLarge if
// k > store size.
std::vector<std::pair<int32_t, double>> brute_topk(const VectorStore& store, const float* query,
                                                   double query_norm, uint32_t k, Metric metric);

// All queries, parallel across queries.
GroundTruth brute_topk_all(const VectorStore& store, const QuerySet& queries, uint32_t k,
                           Metric metric, int threads = 0);

// |returned ∩ truth| / |truth|. Truth must be non-empty.
double recall_at_k(std::span<const int32_t> returned, std::span<const int32_t> truth);

GroundTruth truth_from_ivecs(const std::string& path);
void truth_to_ivecs(const GroundTruth& gt, const std::string& path);

}  // namespace psp
