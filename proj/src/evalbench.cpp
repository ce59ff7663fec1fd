#include "psp/evalbench.hpp"

#include <algorithm>
#include <chrono>

#include "psp/knn_graph.hpp"
#include "psp/rng.hpp"

namespace psp {

namespace {

void check_truth(const QuerySet& queries, const GroundTruth& truth, uint32_t k) {
  if (truth.count != queries.count())
    throw DataError("TruthMismatch: truth rows vs query count");
  if (truth.k < k) throw DataError("TruthMismatch: truth depth below requested k");
}

uint64_t percentile_ns(std::vector<uint64_t>& sorted, double p) {
  size_t idx = static_cast<size_t>(p * static_cast<double>(sorted.size()));
  if (idx >= sorted.size()) idx = sorted.size() - 1;
  return sorted[idx];
}

}  // namespace

BenchRow bench_point(const PspIndex& index, const VectorStore& store, const QuerySet& queries,
                     const GroundTruth& truth, uint32_t k, uint32_t ls, Metric metric,
                     SearchParams::Entry entry, bool aet, float theta_override, uint64_t seed) {
  check_truth(queries, truth, k);
  const size_t q = queries.count();
  SearchScratch scratch;
  std::vector<uint64_t> lat(q);
  std::vector<double> dcs(q);
  double recall_sum = 0, hops_sum = 0, dc_sum = 0;

  auto t0 = std::chrono::steady_clock::now();
  for (size_t qi = 0; qi < q; ++qi) {
    SearchParams sp;
    sp.ls = ls;
    sp.k = k;
    sp.metric = metric;
    sp.entry = entry;
    sp.use_aet = aet;
    sp.theta_override = theta_override;
    sp.seed = seed ^ splitmix64(qi);
    SearchTrace trace = greedy_search(index, store, queries.row(static_cast<uint32_t>(qi)), sp,
                                      scratch);
    lat[qi] = trace.wall_ns;
    dcs[qi] = static_cast<double>(trace.dc);
    dc_sum += static_cast<double>(trace.dc);
    hops_sum += static_cast<double>(trace.hops);
    std::vector<int32_t> got;
    got.reserve(trace.result.size());
    for (const auto& [id, score] : trace.result) got.push_back(static_cast<int32_t>(id));
    auto row = truth.row(static_cast<uint32_t>(qi));
    recall_sum += recall_at_k(got, row.subspan(0, k));
  }
  double total_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  BenchRow out;
  out.ls = ls;
  out.aet = aet;
  out.recall_mean = recall_sum / static_cast<double>(q);
  out.qps = total_s > 0 ? static_cast<double>(q) / total_s : 0.0;
  out.mean_dc = dc_sum / static_cast<double>(q);
  out.mean_hops = hops_sum / static_cast<double>(q);
  std::nth_element(dcs.begin(), dcs.begin() + q / 2, dcs.end());
  out.median_dc = dcs[q / 2];
  double wall_sum = 0;
  for (uint64_t v : lat) wall_sum += static_cast<double>(v);
  out.mean_wall_ns = wall_sum / static_cast<double>(q);
  std::sort(lat.begin(), lat.end());
  out.p50_ns = percentile_ns(lat, 0.50);
  out.p99_ns = percentile_ns(lat, 0.99);
  return out;
}

BenchReport run_sweep(const PspIndex& index, const VectorStore& store, const QuerySet& queries,
                      const GroundTruth& truth, uint32_t k, const std::vector<uint32_t>& ls_list,
                      int aet_mode, Metric metric, SearchParams::Entry entry, uint64_t seed) {
  if (ls_list.empty()) throw DataError("InvalidParam: empty l_s list");
  BenchReport rep;
  rep.k = k;
  rep.metric = metric;
  std::vector<uint32_t> ls_sorted = ls_list;
  std::sort(ls_sorted.begin(), ls_sorted.end());
  const float nan_theta = std::numeric_limits<float>::quiet_NaN();
  for (uint32_t ls : ls_sorted) {
    if (aet_mode == 0 || aet_mode == 2)
      rep.rows.push_back(
          bench_point(index, store, queries, truth, k, ls, metric, entry, false, nan_theta, seed));
    if (aet_mode == 1 || aet_mode == 2)
      rep.rows.push_back(
          bench_point(index, store, queries, truth, k, ls, metric, entry, true, nan_theta, seed));
  }
  return rep;
}

BenchRow brute_force_row(const VectorStore& store, const QuerySet& queries,
                         const GroundTruth& truth, uint32_t k, Metric metric) {
  check_truth(queries, truth, k);
  const size_t q = queries.count();
  const size_t n = store.count();
  std::vector<uint64_t> lat(q);
  double recall_sum = 0;

  auto t0 = std::chrono::steady_clock::now();
  for (size_t qi = 0; qi < q; ++qi) {
    auto tq = std::chrono::steady_clock::now();
    const float* qv = queries.row(static_cast<uint32_t>(qi));
    double qnorm = 0;
    if (metric == Metric::cosine) {
      double acc = 0;
      for (uint32_t j = 0; j < store.dim; ++j) acc += static_cast<double>(qv[j]) * qv[j];
      qnorm = std::sqrt(acc);
    }
    auto top = brute_topk(store, qv, qnorm, k, metric);
    lat[qi] = static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                        std::chrono::steady_clock::now() - tq)
                                        .count());
    std::vector<int32_t> got;
    got.reserve(top.size());
    for (const auto& [id, score] : top) got.push_back(id);
    recall_sum += recall_at_k(got, truth.row(static_cast<uint32_t>(qi)).subspan(0, k));
  }
  double total_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  BenchRow out;
  out.ls = 0;
  out.aet = false;
  out.recall_mean = recall_sum / static_cast<double>(q);
  out.qps = total_s > 0 ? static_cast<double>(q) / total_s : 0.0;
  out.mean_dc = static_cast<double>(n);
  out.median_dc = static_cast<double>(n);
  out.mean_hops = 0;
  double wall_sum = 0;
  for (uint64_t v : lat) wall_sum += static_cast<double>(v);
  out.mean_wall_ns = wall_sum / static_cast<double>(q);
  std::sort(lat.begin(), lat.end());
  out.p50_ns = percentile_ns(lat, 0.50);
  out.p99_ns = percentile_ns(lat, 0.99);
  return out;
}

OperatingPoint operating_point(const PspIndex& index, const VectorStore& store,
                               const QuerySet& queries, const GroundTruth& truth, uint32_t k,
                               const std::vector<uint32_t>& ls_grid, double target_recall,
                               Metric metric, SearchParams::Entry entry, bool aet,
                               float theta_override, uint64_t seed) {
  if (ls_grid.empty()) throw DataError("InvalidParam: empty l_s grid");
  std::vector<uint32_t> grid = ls_grid;
  std::sort(grid.begin(), grid.end());
  OperatingPoint op;
  for (uint32_t ls : grid) {
    op.row = bench_point(index, store, queries, truth, k, ls, metric, entry, aet, theta_override,
                         seed);
    if (op.row.recall_mean >= target_recall) {
      op.met = true;
      break;
    }
  }
  return op;
}

AblationReport ablation_matrix(const VectorStore& store, const QuerySet& queries, uint32_t k,
                               const BuildParams& base_params, const AetTrainParams& aet_params,
                               const std::vector<uint32_t>& ls_grid, double target_recall,
                               uint64_t seed) {
  const size_t n = store.count();
  BuildParams no_ef = base_params;
  no_ef.S = 0;
  no_ef.seed = seed;
  BuildParams with_ef = base_params;
  with_ef.seed = seed;

  // one bootstrap shared by every variant
  uint32_t K = std::min<uint32_t>(base_params.K, static_cast<uint32_t>(n - 1));
  KnnGraph knn;
  if (n <= 100000) {
    knn = build_exact_knn(store, K, base_params.threads);
  } else {
    NnDescentParams nd = base_params.nd;
    nd.seed = seed;
    nd.threads = base_params.threads;
    knn = build_nndescent_knn(store, K, nd).graph;
  }

  PspIndex base_index = build_index(store, no_ef, nullptr, &knn);
  PspIndex ef_index = build_index(store, with_ef, nullptr, &knn);

  AetTrainParams tp = aet_params;
  tp.seed = seed;
  AetModel model = train_aet(store, tp);
  PspIndex aet_index = build_index(store, no_ef, nullptr, &knn);
  aet_index.aet = model;
  PspIndex full_index = build_index(store, with_ef, nullptr, &knn);
  full_index.aet = model;

  GroundTruth truth = brute_topk_all(store, queries, k, Metric::ip);
  const float nan_theta = std::numeric_limits<float>::quiet_NaN();

  AblationReport rep;
  rep.target_recall = target_recall;
  auto add = [&](const std::string& name, const PspIndex& index, SearchParams::Entry entry,
                 bool aet) {
    rep.rows.push_back({name, operating_point(index, store, queries, truth, k, ls_grid,
                                              target_recall, Metric::ip, entry, aet, nan_theta,
                                              seed)});
  };
  add("base", base_index, SearchParams::Entry::random, false);
  add("+ef", ef_index, SearchParams::Entry::random, false);
  add("+sn", base_index, SearchParams::Entry::sn, false);
  add("+aet", aet_index, SearchParams::Entry::random, true);
  add("full", full_index, SearchParams::Entry::sn, true);
  return rep;
}

}  // namespace psp
