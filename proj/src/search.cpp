#include "psp/search.hpp"

#include <algorithm>
#include <chrono>
#include <unordered_set>

#include "psp/rng.hpp"

namespace psp {

namespace {

// pool ordering key, smaller = better
inline float pool_key(Metric metric, double score_or_dist) {
  if (metric == Metric::l2) return static_cast<float>(score_or_dist);
  return static_cast<float>(-score_or_dist);
}

inline double score_node(const VectorStore& store, const float* query, double query_norm,
                         uint32_t node, Metric metric) {
  switch (metric) {
    case Metric::ip: return inner_product(query, store.row(node), store.dim);
    case Metric::l2: return l2_distance(query, store.row(node), store.dim);
    case Metric::cosine: {
      double qn = query_norm;
      if (qn < 1e-300) return 0.0;
      return inner_product(query, store.row(node), store.dim) / (qn * store.norms[node]);
    }
  }
  return 0.0;
}

}  // namespace

std::vector<uint32_t> select_entries(const NavIvf& nav, const float* query, uint32_t dim,
                                     uint32_t ls, uint64_t seed) {
  if (nav.dim != dim) throw DataError("DimMismatch: query dim vs navigation dim");
  const uint32_t c = nav.c();
  // rank clusters by cosine similarity; centroids are unit so the query norm
  // only scales scores and the ranking is by raw dot product
  std::vector<std::pair<double, uint32_t>> order(c);
  for (uint32_t i = 0; i < c; ++i)
    order[i] = {inner_product(query, nav.centroid(i), dim), i};
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<uint32_t> out;
  out.reserve(ls);
  CounterRng rng(seed, 0xE5E1ULL);
  for (uint32_t rank = 0; rank < c && out.size() < ls; ++rank) {
    const auto& list = nav.lists[order[rank].second];
    if (list.empty()) continue;
    uint32_t want = std::min<uint32_t>(static_cast<uint32_t>(ls - out.size()),
                                       static_cast<uint32_t>(list.size()));
    if (want >= list.size()) {
      out.insert(out.end(), list.begin(), list.end());
    } else {
      auto picks = sample_distinct(rng, static_cast<uint32_t>(list.size()), want);
      for (uint32_t p : picks) out.push_back(list[p]);
    }
  }
  return out;
}

SearchTrace greedy_search(const PspIndex& index, const VectorStore& store, const float* query,
                          const SearchParams& params, SearchScratch& scratch,
                          std::vector<PopRecord>* pop_log, const int32_t* truth_ids,
                          uint32_t truth_k, DcCounter* shadow_dc) {
  params.validate();
  if (index.dim != store.dim) throw DataError("DimMismatch: index dim vs store dim");
  if (index.n() != store.count()) throw DataError("DimMismatch: index size vs store size");
  const size_t n = store.count();
  const uint32_t ls = std::min<uint32_t>(params.ls, static_cast<uint32_t>(n));
  auto t_start = std::chrono::steady_clock::now();

  const AetModel* model = nullptr;
  float theta = 0.f;
  if (params.use_aet) {
    if (!index.aet) throw DataError("InvalidParam: AET requested but index carries no model");
    if (params.metric != Metric::ip)
      throw DataError("InvalidParam: AET is defined for the ip metric only");
    model = &*index.aet;
    theta = std::isnan(params.theta_override) ? model->theta : params.theta_override;
  }

  double query_norm = 0.0;
  if (params.metric == Metric::cosine) {
    double acc = 0;
    for (uint32_t j = 0; j < store.dim; ++j) acc += static_cast<double>(query[j]) * query[j];
    query_norm = std::sqrt(acc);
  }

  std::unordered_set<int32_t> truth;
  if (pop_log && truth_ids && truth_k > 0) truth.insert(truth_ids, truth_ids + truth_k);

  scratch.ensure(n);
  const uint32_t epoch = scratch.next_epoch();
  auto& stamp = scratch.stamp;
  auto& pool = scratch.pool;
  pool.clear();
  pool.resize(static_cast<size_t>(ls) + 1);

  SearchTrace trace;
  std::vector<uint32_t> entries;
  if (params.entry == SearchParams::Entry::sn) {
    entries = select_entries(index.nav, query, store.dim, ls, params.seed);
  } else {
    CounterRng rng(params.seed, 0x6E7ULL);
    entries = sample_distinct(rng, static_cast<uint32_t>(n), ls);
  }
  if (entries.empty()) throw InternalError("no entry nodes available");

  uint32_t size = 0;
  for (uint32_t e : entries) {
    if (stamp[e] == epoch) continue;
    stamp[e] = epoch;
    double s = score_node(store, query, query_norm, e, params.metric);
    ++trace.dc;
    if (shadow_dc) shadow_dc->bump();
    if (size < ls) {
      pool[size++] = Neighbor(e, pool_key(params.metric, s), true);
    }
  }
  std::sort(pool.begin(), pool.begin() + size);

  FeatureState feat;
  uint32_t k_pos = 0;
  while (k_pos < size) {
    if (!pool[k_pos].flag) {
      ++k_pos;
      continue;
    }
    pool[k_pos].flag = false;
    const uint32_t node = pool[k_pos].id;
    ++trace.hops;
    trace.visited.push_back(node);
    const bool topk_changed = k_pos < params.k;

    if (model || pop_log) {
      double ip = params.metric == Metric::ip ? -static_cast<double>(pool[k_pos].dist)
                                              : inner_product(query, store.row(node), store.dim);
      double norm = std::max(static_cast<double>(store.norms[node]), 1e-30);
      update_features(feat, ip, norm, topk_changed);
      if (pop_log) {
        PopRecord rec;
        rec.node = node;
        rec.ip = ip;
        rec.norm = norm;
        std::copy(feat.f.begin(), feat.f.end(), rec.features);
        rec.topk_changed = topk_changed;
        pop_log->push_back(rec);
      }
      if (model && aet_evaluate(*model, feat, theta)) {
        trace.early_terminated = true;
        break;
      }
    }

    uint32_t nk = size;
    for (uint32_t v : index.graph.adj[node]) {
      if (stamp[v] == epoch) continue;
      stamp[v] = epoch;
      double s = score_node(store, query, query_norm, v, params.metric);
      ++trace.dc;
      if (shadow_dc) shadow_dc->bump();
      Neighbor nn(v, pool_key(params.metric, s), true);
      if (size == ls && !(nn < pool[size - 1])) continue;
      unsigned r = insert_into_pool(pool.data(), size, nn);
      if (r > size) continue;  // duplicate (defensive; stamps already dedup)
      if (size < ls) ++size;
      if (r < nk) nk = r;
    }
    if (nk <= k_pos)
      k_pos = nk;
    else
      ++k_pos;

    if (pop_log && !truth.empty()) {
      uint32_t hits = 0;
      uint32_t top = std::min<uint32_t>(params.k, size);
      for (uint32_t i = 0; i < top; ++i)
        if (truth.count(static_cast<int32_t>(pool[i].id))) ++hits;
      pop_log->back().topk_hits = hits;
    }
  }

  uint32_t out_k = std::min<uint32_t>(params.k, size);
  trace.result.reserve(out_k);
  for (uint32_t i = 0; i < out_k; ++i) {
    double key = pool[i].dist;
    trace.result.emplace_back(pool[i].id, params.metric == Metric::l2 ? key : -key);
  }
  trace.wall_ns = static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                           t_start)
          .count());
  return trace;
}

WalkPaths dual_metric_walk(const ProximityGraph& g, const VectorStore& store, const float* query,
                           uint32_t dim, double mu, uint32_t entry, uint32_t max_steps) {
  if (dim != store.dim) throw DataError("DimMismatch: query dim vs store dim");
  if (entry >= g.n()) throw DataError("InvalidParam: entry node out of range");
  if (!(mu > 0)) throw DataError("InvalidParam: mu must be positive");
  if (max_steps == 0) max_steps = 1;
  WalkPaths paths;

  // inner-product ascent toward q
  {
    uint32_t cur = entry;
    double best = inner_product(query, store.row(cur), dim);
    paths.path_ip.push_back(cur);
    while (paths.path_ip.size() < max_steps) {
      uint32_t next = UINT32_MAX;
      double next_score = best;
      for (uint32_t v : g.adj[cur]) {
        double s = inner_product(query, store.row(v), dim);
        if (s > next_score || (s == next_score && next != UINT32_MAX && v < next)) {
          next_score = s;
          next = v;
        }
      }
      if (next == UINT32_MAX) break;
      cur = next;
      best = next_score;
      paths.path_ip.push_back(cur);
    }
  }

  // L2 descent toward mu*q
  {
    std::vector<float> target(dim);
    for (uint32_t j = 0; j < dim; ++j) target[j] = static_cast<float>(mu * query[j]);
    uint32_t cur = entry;
    double best = l2_distance(target.data(), store.row(cur), dim);
    paths.path_l2.push_back(cur);
    while (paths.path_l2.size() < max_steps) {
      uint32_t next = UINT32_MAX;
      double next_dist = best;
      for (uint32_t v : g.adj[cur]) {
        double dist = l2_distance(target.data(), store.row(v), dim);
        if (dist < next_dist || (dist == next_dist && next != UINT32_MAX && v < next)) {
          next_dist = dist;
          next = v;
        }
      }
      if (next == UINT32_MAX) break;
      cur = next;
      best = next_dist;
      paths.path_l2.push_back(cur);
    }
  }
  return paths;
}

}  // namespace psp
