#include "psp/oracle.hpp"

#include <omp.h>

#include <algorithm>
#include <unordered_set>

namespace psp {

std::vector<std::pair<int32_t, double>> brute_topk(const VectorStore& store, const float* query,
                                                   double query_norm, uint32_t k, Metric metric) {
  const size_t n = store.count();
  if (k == 0) throw DataError("InvalidParam: k=0");
  if (k > n)
    throw DataError("KTooLarge: k=" + std::to_string(k) + " exceeds store size " +
                    std::to_string(n));
  // (score, -id) max-selection: keep a sorted vector of the k best; ties on
  // score resolve toward the smaller id.
  std::vector<std::pair<double, int32_t>> best;
  best.reserve(k + 1);
  auto better = [](const std::pair<double, int32_t>& a, const std::pair<double, int32_t>& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  for (size_t i = 0; i < n; ++i) {
    double s = metric_score(metric, store.row(i), query, store.dim, store.norms[i], query_norm);
    std::pair<double, int32_t> cand{s, static_cast<int32_t>(i)};
    if (best.size() < k || better(cand, best.back())) {
      best.insert(std::lower_bound(best.begin(), best.end(), cand, better), cand);
      if (best.size() > k) best.pop_back();
    }
  }
  std::vector<std::pair<int32_t, double>> out(best.size());
  for (size_t i = 0; i < best.size(); ++i) out[i] = {best[i].second, best[i].first};
  return out;
}

GroundTruth brute_topk_all(const VectorStore& store, const QuerySet& queries, uint32_t k,
                           Metric metric, int threads) {
  if (store.dim != queries.dim)
    throw DataError("DimMismatch: store dim " + std::to_string(store.dim) + " vs query dim " +
                    std::to_string(queries.dim));
  GroundTruth gt;
  gt.k = k;
  gt.count = queries.count();
  gt.ids.resize(gt.count * k);
  gt.scores.resize(gt.count * k);
  if (threads > 0) omp_set_num_threads(threads);
#pragma omp parallel for schedule(dynamic, 8)
  for (int64_t qi = 0; qi < static_cast<int64_t>(gt.count); ++qi) {
    auto top = brute_topk(store, queries.row(qi), queries.norms[qi], k, metric);
    for (uint32_t r = 0; r < k; ++r) {
      gt.ids[qi * k + r] = top[r].first;
      gt.scores[qi * k + r] = static_cast<float>(top[r].second);
    }
  }
  return gt;
}

double recall_at_k(std::span<const int32_t> returned, std::span<const int32_t> truth) {
  if (truth.empty()) throw DataError("EmptyTruth: recall against empty truth row");
  std::unordered_set<int32_t> want(truth.begin(), truth.end());
  size_t hit = 0;
  for (int32_t id : returned)
    if (want.count(id)) ++hit;
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

GroundTruth truth_from_ivecs(const std::string& path) {
  auto rows = load_ivecs(path);
  if (rows.empty()) throw DataError("EmptyFile: no truth rows in " + path);
  GroundTruth gt;
  gt.k = static_cast<uint32_t>(rows[0].size());
  gt.count = rows.size();
  gt.ids.reserve(gt.count * gt.k);
  for (const auto& row : rows) {
    if (row.size() != gt.k)
      throw DataError("MalformedRecord: ragged truth rows in " + path);
    gt.ids.insert(gt.ids.end(), row.begin(), row.end());
  }
  return gt;
}

void truth_to_ivecs(const GroundTruth& gt, const std::string& path) {
  std::vector<std::vector<int32_t>> rows(gt.count);
  for (size_t qi = 0; qi < gt.count; ++qi)
    rows[qi].assign(gt.ids.begin() + qi * gt.k, gt.ids.begin() + (qi + 1) * gt.k);
  save_ivecs(rows, path);
}

}  // namespace psp
