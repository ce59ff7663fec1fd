#include "psp/theory.hpp"

#include <omp.h>

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "psp/oracle.hpp"
#include "psp/rng.hpp"
#include "psp/search.hpp"

namespace psp {

namespace {

double norm_sq(const VectorStore& store, uint32_t i) {
  return inner_product(store.row(i), store.row(i), store.dim);
}

}  // namespace

std::vector<uint32_t> mips_argmax_set(const VectorStore& store, const float* query) {
  const size_t n = store.count();
  if (n == 0) throw DataError("InvalidParam: empty store");
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> ips(n);
  for (size_t i = 0; i < n; ++i) {
    ips[i] = inner_product(query, store.row(i), store.dim);
    best = std::max(best, ips[i]);
  }
  std::vector<uint32_t> out;
  for (size_t i = 0; i < n; ++i)
    if (ips[i] == best) out.push_back(static_cast<uint32_t>(i));
  return out;
}

uint32_t scaled_nn(const VectorStore& store, const float* query, double mu) {
  const size_t n = store.count();
  if (n == 0) throw DataError("InvalidParam: empty store");
  uint32_t arg = 0;
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    double obj = norm_sq(store, static_cast<uint32_t>(i)) -
                 2.0 * mu * inner_product(query, store.row(i), store.dim);
    if (obj < best) {
      best = obj;
      arg = static_cast<uint32_t>(i);
    }
  }
  return arg;
}

MuBarReport compute_mu_bar(const VectorStore& store, const float* query) {
  const size_t n = store.count();
  if (n < 2) throw DataError("InvalidParam: need at least 2 points");
  MuBarReport rep;
  rep.optimum_set = mips_argmax_set(store, query);
  if (rep.optimum_set.size() == n)
    throw DataError("DegenerateDataset: every point attains the optimum inner product");

  // representative optimum: smallest norm, then smallest id
  uint32_t star = rep.optimum_set[0];
  double star_nsq = norm_sq(store, star);
  for (uint32_t id : rep.optimum_set) {
    double nsq = norm_sq(store, id);
    if (nsq < star_nsq) {
      star = id;
      star_nsq = nsq;
    }
  }
  rep.witness = star;
  const double star_ip = inner_product(query, store.row(star), store.dim);

  std::unordered_set<uint32_t> optimum(rep.optimum_set.begin(), rep.optimum_set.end());
  rep.mu_bar = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    if (optimum.count(static_cast<uint32_t>(i))) continue;
    double gap = star_ip - inner_product(query, store.row(i), store.dim);
    double term = (star_nsq - norm_sq(store, static_cast<uint32_t>(i))) / (2.0 * gap);
    rep.terms.emplace_back(static_cast<uint32_t>(i), term);
    rep.mu_bar = std::max(rep.mu_bar, term);
  }
  rep.effective_lower = std::max(rep.mu_bar, 0.0);

  const double anchor = std::max(rep.mu_bar, 1e-6);
  rep.grid = {1.01 * anchor, 2 * anchor, 10 * anchor, 100 * anchor, 1000 * anchor};
  rep.grid_ok = true;
  for (double mu : rep.grid) {
    uint32_t nn = scaled_nn(store, query, mu);
    if (!optimum.count(nn)) rep.grid_ok = false;
  }
  return rep;
}

OverlapReport overlap_experiment(const ProximityGraph& g, const VectorStore& store,
                                 const QuerySet& queries, const OverlapParams& params) {
  if (queries.dim != store.dim) throw DataError("DimMismatch: query dim vs store dim");
  if (params.threads > 0) omp_set_num_threads(params.threads);
  const size_t q = queries.count();
  const uint32_t n = static_cast<uint32_t>(store.count());
  const uint32_t k = std::min<uint32_t>(params.k, n);

  GroundTruth truth = brute_topk_all(store, queries, k, Metric::ip);

  // pool search runs over the raw graph; navigation is bypassed via random
  // entries so ideal graphs (which carry no navigation layer) work too
  PspIndex shim;
  shim.dim = store.dim;
  shim.graph = g;

  OverlapReport rep;
  for (double mu : params.mu_list) {
    if (!(mu > 0)) throw DataError("InvalidParam: mu must be positive");
    double overlap_sum = 0.0, recall_sum = 0.0;
#pragma omp parallel reduction(+ : overlap_sum, recall_sum)
    {
      SearchScratch scratch;
      std::vector<float> scaled(store.dim);
#pragma omp for schedule(dynamic, 4)
      for (int64_t qi = 0; qi < static_cast<int64_t>(q); ++qi) {
        const float* qv = queries.row(static_cast<uint32_t>(qi));
        CounterRng entry_rng(params.seed, 0x0E17ULL + static_cast<uint64_t>(qi));
        uint32_t entry = entry_rng.next_below(n);

        WalkPaths paths = dual_metric_walk(g, store, qv, store.dim, mu, entry, params.max_steps);
        size_t shorter = std::min(paths.path_ip.size(), paths.path_l2.size());
        size_t longer = std::max(paths.path_ip.size(), paths.path_l2.size());
        size_t match = 0;
        for (size_t i = 0; i < shorter; ++i)
          if (paths.path_ip[i] == paths.path_l2[i]) ++match;
        overlap_sum += longer == 0 ? 0.0 : static_cast<double>(match) / static_cast<double>(longer);

        for (uint32_t j = 0; j < store.dim; ++j)
          scaled[j] = static_cast<float>(mu * qv[j]);
        SearchParams sp;
        sp.ls = std::max(params.ls, k);
        sp.k = k;
        sp.metric = Metric::l2;
        sp.entry = SearchParams::Entry::random;
        sp.seed = params.seed ^ splitmix64(static_cast<uint64_t>(qi));
        SearchTrace trace = greedy_search(shim, store, scaled.data(), sp, scratch);
        std::vector<int32_t> got;
        got.reserve(trace.result.size());
        for (const auto& [id, score] : trace.result) got.push_back(static_cast<int32_t>(id));
        recall_sum += recall_at_k(got, truth.row(static_cast<uint32_t>(qi)));
      }
    }
    rep.mu.push_back(mu);
    rep.mean_overlap.push_back(overlap_sum / static_cast<double>(q));
    rep.mean_l2_recall.push_back(recall_sum / static_cast<double>(q));
  }
  return rep;
}

double qs_probability_paper(uint32_t d, double sigma2, double s) {
  if (d == 0 || !(sigma2 > 0) || s < 0) throw DataError("InvalidParam: qs arguments");
  if (s == 0) return 0.0;
  return boost::math::gamma_p(0.5 * d, s / (2.0 * sigma2));
}

double qs_probability_exact(uint32_t d, double sigma2, double s) {
  if (d == 0 || !(sigma2 > 0) || s < 0) throw DataError("InvalidParam: qs arguments");
  if (s == 0) return 0.0;
  return boost::math::gamma_p(0.5 * d, s / (4.0 * sigma2));
}

double qs_monte_carlo(uint32_t d, double sigma2, double s, uint64_t trials, uint64_t seed) {
  if (d == 0 || !(sigma2 > 0) || s < 0) throw DataError("InvalidParam: qs arguments");
  if (trials < 100000) throw DataError("InvalidParam: need at least 1e5 trials");
  const double sigma = std::sqrt(sigma2);
  uint64_t hits = 0;
#pragma omp parallel for schedule(static) reduction(+ : hits)
  for (int64_t t = 0; t < static_cast<int64_t>(trials); ++t) {
    CounterRng rng(seed, static_cast<uint64_t>(t) + 1);
    double dist_sq = 0.0;
    for (uint32_t j = 0; j < d; ++j) {
      double x = sigma * rng.next_gaussian();
      double y = sigma * rng.next_gaussian();
      dist_sq += (x - y) * (x - y);
    }
    if (dist_sq < s) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

double median_pairwise_sq_distance(const VectorStore& store, size_t pairs, uint64_t seed) {
  const uint32_t n = static_cast<uint32_t>(store.count());
  if (n < 2) throw DataError("InvalidParam: need at least 2 points");
  if (pairs == 0) throw DataError("InvalidParam: need at least one pair");
  std::vector<double> d2(pairs);
#pragma omp parallel for schedule(static)
  for (int64_t t = 0; t < static_cast<int64_t>(pairs); ++t) {
    CounterRng rng(seed, 0xD157ULL + static_cast<uint64_t>(t));
    uint32_t i = rng.next_below(n);
    uint32_t j = rng.next_below(n);
    while (j == i) j = rng.next_below(n);
    d2[t] = l2_sqr(store.row(i), store.row(j), store.dim);
  }
  std::nth_element(d2.begin(), d2.begin() + pairs / 2, d2.end());
  return d2[pairs / 2];
}

KmipsOverlapReport kmips_neighborhood_overlap(const VectorStore& store, const QuerySet& queries,
                                              uint32_t k, std::vector<double> s_grid,
                                              uint64_t seed, int threads) {
  if (queries.dim != store.dim) throw DataError("DimMismatch: query dim vs store dim");
  if (threads > 0) omp_set_num_threads(threads);
  KmipsOverlapReport rep;
  rep.median_pairwise_sq = median_pairwise_sq_distance(store, 100000, seed);
  if (s_grid.empty()) {
    for (double f : {0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9})
      s_grid.push_back(f * rep.median_pairwise_sq);
  }
  std::sort(s_grid.begin(), s_grid.end());
  rep.s_grid = s_grid;

  const size_t q = queries.count();
  GroundTruth truth = brute_topk_all(store, queries, k, Metric::ip);
  std::vector<double> acc(s_grid.size(), 0.0);
#pragma omp parallel
  {
    std::vector<double> local(s_grid.size(), 0.0);
    std::vector<double> d2(k);
#pragma omp for schedule(dynamic, 4)
    for (int64_t qi = 0; qi < static_cast<int64_t>(q); ++qi) {
      auto row = truth.row(static_cast<uint32_t>(qi));
      const float* top1 = store.row(static_cast<uint32_t>(row[0]));
      for (uint32_t j = 0; j < k; ++j)
        d2[j] = l2_sqr(top1, store.row(static_cast<uint32_t>(row[j])), store.dim);
      std::sort(d2.begin(), d2.end());
      for (size_t si = 0; si < s_grid.size(); ++si) {
        size_t inside = std::upper_bound(d2.begin(), d2.end(), s_grid[si]) - d2.begin();
        local[si] += static_cast<double>(inside) / static_cast<double>(k);
      }
    }
#pragma omp critical
    for (size_t si = 0; si < s_grid.size(); ++si) acc[si] += local[si];
  }
  rep.overlap.resize(s_grid.size());
  for (size_t si = 0; si < s_grid.size(); ++si)
    rep.overlap[si] = acc[si] / static_cast<double>(q);
  return rep;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DataError("InvalidParam: spearman needs two equal-length series (>= 2)");
  auto ranks = [](const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (size_t t = i; t <= j; ++t) r[order[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  auto rx = ranks(x), ry = ranks(y);
  double mx = 0, my = 0;
  for (size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(rx.size());
  my /= static_cast<double>(ry.size());
  double num = 0, vx = 0, vy = 0;
  for (size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx == 0 || vy == 0) return 0.0;
  return num / std::sqrt(vx * vy);
}

}  // namespace psp
