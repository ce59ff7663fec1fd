#include "psp/build.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "psp/rng.hpp"

namespace psp {

namespace {

constexpr double kCosSlack = 1e-6;  // lets exactly-alpha separations pass

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// cos of the angle at p between (x-p) and (y-p); callers pass the two
// difference norms they already know
double diff_cos(const float* p, const float* x, const float* y, uint32_t d, double nx, double ny) {
  double dot = 0.0;
  for (uint32_t j = 0; j < d; ++j)
    dot += (static_cast<double>(x[j]) - p[j]) * (static_cast<double>(y[j]) - p[j]);
  return dot / (nx * ny);
}

// greedy angle-diverse selection shared by nssg_prune and ideal_prune;
// pool is ascending (dist, id), zero-distance duplicates skipped
void select_by_angle(const VectorStore& store, uint32_t p,
                     const std::vector<std::pair<float, uint32_t>>& pool, uint32_t R,
                     double cos_alpha, std::vector<uint32_t>& out,
                     std::vector<float>& out_dists) {
  out.clear();
  out_dists.clear();
  const float* pv = store.row(p);
  for (const auto& [dist, id] : pool) {
    if (out.size() >= R) break;
    if (!(dist > 0.f)) continue;  // duplicate point
    bool ok = true;
    for (size_t s = 0; s < out.size(); ++s) {
      double c = diff_cos(pv, store.row(id), store.row(out[s]), store.dim, dist, out_dists[s]);
      if (c > cos_alpha + kCosSlack) {
        ok = false;
        break;
      }
    }
    if (ok) {
      out.push_back(id);
      out_dists.push_back(dist);
    }
  }
}

}  // namespace

void BuildParams::validate(size_t n) const {
  if (n < 2) throw DataError("InvalidParam: need at least 2 points");
  if (R == 0) throw DataError("InvalidParam: R must be positive");
  if (L < R) throw DataError("InvalidParam: L must be >= R");
  if (K == 0) throw DataError("InvalidParam: K must be positive");
  if (!(alpha_deg > 0.0 && alpha_deg < 180.0))
    throw DataError("InvalidParam: alpha must lie in (0, 180) degrees");
  uint32_t c = clusters ? clusters : auto_clusters(n);
  uint32_t m = nav_total ? nav_total : auto_nav_total(n);
  if (c == 0 || m == 0) throw DataError("InvalidParam: c and m must be positive");
  if (c > m || c > n)
    throw DataError("InvalidParam: need c <= min(m, n), got c=" + std::to_string(c));
}

uint32_t BuildParams::auto_clusters(size_t n) const {
  if (n >= 100000) return 64;
  return std::max<uint32_t>(8, static_cast<uint32_t>(n / 16384));
}

uint32_t BuildParams::auto_nav_total(size_t n) const {
  if (n >= 100000) return 4096;
  uint32_t c = clusters ? clusters : auto_clusters(n);
  return std::min<uint32_t>(4096, std::max<uint32_t>(2 * c, static_cast<uint32_t>(n / 8)));
}

std::vector<uint32_t> NavIvf::all_ids() const {
  std::vector<uint32_t> out;
  for (const auto& l : lists) out.insert(out.end(), l.begin(), l.end());
  return out;
}

ProximityGraph nssg_prune(const KnnGraph& knn, const VectorStore& store,
                          const BuildParams& params) {
  const size_t n = store.count();
  if (knn.n != n) throw DataError("DimMismatch: kNN graph size vs store");
  if (params.threads > 0) omp_set_num_threads(params.threads);
  const double cos_alpha = std::cos(params.alpha_deg * M_PI / 180.0);
  ProximityGraph g;
  g.adj.resize(n);
#pragma omp parallel
  {
    std::vector<uint32_t> stamp(n, UINT32_MAX);
    std::vector<std::pair<float, uint32_t>> pool;
    std::vector<uint32_t> sel;
    std::vector<float> sel_d;
#pragma omp for schedule(dynamic, 256)
    for (int64_t p = 0; p < static_cast<int64_t>(n); ++p) {
      uint32_t up = static_cast<uint32_t>(p);
      pool.clear();
      stamp[up] = up;
      auto krow = knn.row(up);
      auto kd = knn.row_dists(up);
      for (uint32_t r = 0; r < knn.K; ++r) {
        uint32_t id = krow[r];
        if (stamp[id] == up) continue;
        stamp[id] = up;
        pool.emplace_back(kd[r], id);
      }
      for (uint32_t r = 0; r < knn.K; ++r) {
        auto row2 = knn.row(krow[r]);
        for (uint32_t t = 0; t < knn.K; ++t) {
          uint32_t id = row2[t];
          if (stamp[id] == up) continue;
          stamp[id] = up;
          pool.emplace_back(
              static_cast<float>(l2_distance(store.row(up), store.row(id), store.dim)), id);
        }
      }
      if (pool.size() > params.L) {
        std::nth_element(pool.begin(), pool.begin() + params.L, pool.end());
        pool.resize(params.L);
      }
      std::sort(pool.begin(), pool.end());
      select_by_angle(store, up, pool, params.R, cos_alpha, sel, sel_d);
      g.adj[up] = sel;
    }
  }
  return g;
}

ProximityGraph ideal_prune(const VectorStore& store, double alpha_deg, int threads) {
  const size_t n = store.count();
  if (n < 2) throw DataError("InvalidParam: need at least 2 points");
  if (n > 20000)
    throw DataError("InvalidParam: ideal graph capped at n <= 20000 (quadratic build)");
  if (threads > 0) omp_set_num_threads(threads);
  const double cos_alpha = std::cos(alpha_deg * M_PI / 180.0);
  ProximityGraph g;
  g.adj.resize(n);
#pragma omp parallel
  {
    std::vector<std::pair<float, uint32_t>> pool(n - 1);
    std::vector<uint32_t> sel;
    std::vector<float> sel_d;
#pragma omp for schedule(dynamic, 16)
    for (int64_t p = 0; p < static_cast<int64_t>(n); ++p) {
      uint32_t up = static_cast<uint32_t>(p);
      size_t w = 0;
      for (size_t j = 0; j < n; ++j) {
        if (j == static_cast<size_t>(p)) continue;
        pool[w++] = {static_cast<float>(l2_distance(store.row(up), store.row(j), store.dim)),
                     static_cast<uint32_t>(j)};
      }
      std::sort(pool.begin(), pool.end());
      select_by_angle(store, up, pool, UINT32_MAX, cos_alpha, sel, sel_d);
      g.adj[up] = sel;
    }
  }
  return g;
}

std::vector<uint32_t> edge_refine(const ProximityGraph& g, const VectorStore& store, uint32_t node,
                                  uint32_t S, double alpha_deg) {
  const double cos_alpha = std::cos(alpha_deg * M_PI / 180.0);
  const float* nv = store.row(node);
  // 2-hop candidate set (direct neighbors reappear only via mutual edges)
  std::vector<uint32_t> cands;
  {
    std::vector<uint32_t> seen;  // small; linear dedup is fine at desk degree
    for (uint32_t b : g.adj[node]) {
      for (uint32_t t : g.adj[b]) {
        if (t == node) continue;
        if (std::find(seen.begin(), seen.end(), t) == seen.end()) seen.push_back(t);
      }
    }
    cands = std::move(seen);
  }
  std::vector<uint32_t> merged = g.adj[node];
  if (cands.empty()) return merged;

  std::vector<std::pair<double, uint32_t>> scored;
  scored.reserve(cands.size());
  for (uint32_t t : cands)
    scored.emplace_back(inner_product(nv, store.row(t), store.dim), t);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  std::vector<uint32_t> kept;
  for (const auto& [ip, t] : scored) {
    if (kept.size() >= S) break;
    if (!kept.empty()) {
      bool ok = true;
      for (uint32_t m : kept) {
        double cos_o = cosine_sim(store.row(m), store.row(t), store.dim, store.norms[m],
                                  store.norms[t]);
        if (cos_o > cos_alpha + kCosSlack) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
    }
    kept.push_back(t);
  }
  for (uint32_t t : kept)
    if (std::find(merged.begin(), merged.end(), t) == merged.end()) merged.push_back(t);
  return merged;
}

void apply_edge_refine(ProximityGraph& g, const VectorStore& store, uint32_t S, double alpha_deg,
                       int threads) {
  if (S == 0) return;
  if (threads > 0) omp_set_num_threads(threads);
  const size_t n = g.n();
  std::vector<std::vector<uint32_t>> fresh(n);
#pragma omp parallel for schedule(dynamic, 256)
  for (int64_t i = 0; i < static_cast<int64_t>(n); ++i)
    fresh[i] = edge_refine(g, store, static_cast<uint32_t>(i), S, alpha_deg);
  g.adj = std::move(fresh);
}

// ---- spherical navigation ----------------------------------------------

namespace {

void normalized_copy(const VectorStore& store, uint32_t id, float* out) {
  const float* v = store.row(id);
  double norm = store.norms[id];
  if (norm < 1e-12) {
    for (uint32_t j = 0; j < store.dim; ++j) out[j] = 0.f;
    return;
  }
  for (uint32_t j = 0; j < store.dim; ++j) out[j] = static_cast<float>(v[j] / norm);
}

uint32_t nearest_centroid(const float* v, const std::vector<float>& centroids, uint32_t c,
                          uint32_t d) {
  uint32_t best = 0;
  double best_dot = -1e300;
  for (uint32_t i = 0; i < c; ++i) {
    double dot = inner_product(v, centroids.data() + static_cast<size_t>(i) * d, d);
    if (dot > best_dot) {
      best_dot = dot;
      best = i;
    }
  }
  return best;
}

void renormalize(float* v, uint32_t d) {
  double acc = 0;
  for (uint32_t j = 0; j < d; ++j) acc += static_cast<double>(v[j]) * v[j];
  double norm = std::sqrt(acc);
  if (norm < 1e-12) {
    v[0] = 1.f;
    for (uint32_t j = 1; j < d; ++j) v[j] = 0.f;
    return;
  }
  for (uint32_t j = 0; j < d; ++j) v[j] = static_cast<float>(v[j] / norm);
}

double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

NavIvf spherical_navigation(const VectorStore& store, uint32_t m, uint32_t c, uint64_t seed,
                            int threads, uint32_t* kmeans_iters_out) {
  const size_t n = store.count();
  const uint32_t d = store.dim;
  if (c == 0 || m == 0) throw DataError("InvalidParam: c and m must be positive");
  if (c > m || c > n) throw DataError("InvalidParam: need c <= min(m, n)");
  if (m > n) m = static_cast<uint32_t>(n);
  if (threads > 0) omp_set_num_threads(threads);

  // clustering operates on unit-normalized copies of a bounded subsample
  constexpr uint32_t kSubsampleCap = 200000;
  CounterRng seed_rng(seed, 0x5EED0001ULL);
  std::vector<uint32_t> sub_ids;
  if (n > kSubsampleCap)
    sub_ids = sample_distinct(seed_rng, static_cast<uint32_t>(n), kSubsampleCap);
  else {
    sub_ids.resize(n);
    std::iota(sub_ids.begin(), sub_ids.end(), 0u);
  }
  const uint32_t sn = static_cast<uint32_t>(sub_ids.size());
  std::vector<float> sub(static_cast<size_t>(sn) * d);
  for (uint32_t i = 0; i < sn; ++i) normalized_copy(store, sub_ids[i], sub.data() + static_cast<size_t>(i) * d);

  // k-means++ seeding over the subsample
  std::vector<float> centroids(static_cast<size_t>(c) * d);
  {
    CounterRng rng(seed, 0x5EED0002ULL);
    uint32_t first = rng.next_below(sn);
    std::copy_n(sub.data() + static_cast<size_t>(first) * d, d, centroids.data());
    std::vector<double> dist2(sn);
    for (uint32_t i = 0; i < sn; ++i)
      dist2[i] = l2_sqr(sub.data() + static_cast<size_t>(i) * d, centroids.data(), d);
    for (uint32_t k = 1; k < c; ++k) {
      double total = std::accumulate(dist2.begin(), dist2.end(), 0.0);
      uint32_t pick = 0;
      if (total > 0) {
        double target = rng.next_double() * total, run = 0;
        for (uint32_t i = 0; i < sn; ++i) {
          run += dist2[i];
          if (run >= target) {
            pick = i;
            break;
          }
        }
      } else {
        pick = rng.next_below(sn);
      }
      float* ck = centroids.data() + static_cast<size_t>(k) * d;
      std::copy_n(sub.data() + static_cast<size_t>(pick) * d, d, ck);
      for (uint32_t i = 0; i < sn; ++i)
        dist2[i] = std::min(dist2[i], l2_sqr(sub.data() + static_cast<size_t>(i) * d, ck, d));
    }
  }

  // Lloyd iterations; accumulation is serial in id order for determinism
  std::vector<uint32_t> assign(sn, 0);
  uint32_t iters = 0;
  constexpr uint32_t kMaxIters = 25;
  CounterRng reseed_rng(seed, 0x5EED0003ULL);
  for (; iters < kMaxIters; ++iters) {
    bool changed = false;
#pragma omp parallel for schedule(static) reduction(|| : changed)
    for (int64_t i = 0; i < static_cast<int64_t>(sn); ++i) {
      uint32_t a = nearest_centroid(sub.data() + static_cast<size_t>(i) * d, centroids, c, d);
      if (a != assign[i]) changed = true;
      assign[i] = a;
    }
    if (!changed && iters > 0) break;
    std::vector<double> accum(static_cast<size_t>(c) * d, 0.0);
    std::vector<uint32_t> counts(c, 0);
    for (uint32_t i = 0; i < sn; ++i) {
      const float* v = sub.data() + static_cast<size_t>(i) * d;
      double* a = accum.data() + static_cast<size_t>(assign[i]) * d;
      for (uint32_t j = 0; j < d; ++j) a[j] += v[j];
      counts[assign[i]]++;
    }
    for (uint32_t k = 0; k < c; ++k) {
      float* ck = centroids.data() + static_cast<size_t>(k) * d;
      if (counts[k] == 0) {
        // re-seed to a random subsample direction
        uint32_t pick = reseed_rng.next_below(sn);
        std::copy_n(sub.data() + static_cast<size_t>(pick) * d, d, ck);
        continue;
      }
      for (uint32_t j = 0; j < d; ++j)
        ck[j] = static_cast<float>(accum[static_cast<size_t>(k) * d + j] / counts[k]);
      renormalize(ck, d);
    }
  }
  if (kmeans_iters_out) *kmeans_iters_out = iters;

  // full assignment; empty clusters get up to 5 re-seed attempts
  std::vector<std::vector<uint32_t>> members(c);
  CounterRng empty_rng(seed, 0x5EED0004ULL);
  std::vector<uint32_t> assign_all(n);
  for (uint32_t attempt = 0;; ++attempt) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
      std::vector<float> nv(d);
      normalized_copy(store, static_cast<uint32_t>(i), nv.data());
      assign_all[i] = nearest_centroid(nv.data(), centroids, c, d);
    }
    for (auto& l : members) l.clear();
    for (size_t i = 0; i < n; ++i) members[assign_all[i]].push_back(static_cast<uint32_t>(i));
    bool any_empty = false;
    for (uint32_t k = 0; k < c; ++k)
      if (members[k].empty()) any_empty = true;
    if (!any_empty || attempt >= 5) break;
    for (uint32_t k = 0; k < c; ++k) {
      if (!members[k].empty()) continue;
      uint32_t pick = empty_rng.next_below(static_cast<uint32_t>(n));
      normalized_copy(store, pick, centroids.data() + static_cast<size_t>(k) * d);
    }
  }

  // quotas: floor(m/c) each, the quota of still-empty clusters redistributed
  // proportionally to cluster size, every list capped at ceil(m/c)
  const uint32_t base_quota = m / c;
  const uint32_t cap_quota = (m + c - 1) / c;
  std::vector<uint32_t> quota(c);
  uint64_t dropped = 0;
  size_t nonempty_total = 0;
  for (uint32_t k = 0; k < c; ++k) {
    if (members[k].empty()) {
      quota[k] = 0;
      dropped += base_quota;
    } else {
      quota[k] = std::min<uint32_t>(base_quota, static_cast<uint32_t>(members[k].size()));
      nonempty_total += members[k].size();
    }
  }
  if (dropped > 0 && nonempty_total > 0) {
    for (uint32_t k = 0; k < c; ++k) {
      if (members[k].empty()) continue;
      uint64_t extra = dropped * members[k].size() / nonempty_total;
      quota[k] = std::min<uint32_t>(
          std::min<uint64_t>(quota[k] + extra, cap_quota),
          static_cast<uint32_t>(members[k].size()));
    }
  }

  // Gaussian upper-tail weighting on original-space norms, then weighted
  // sampling without replacement (exponential-key method)
  NavIvf nav;
  nav.dim = d;
  nav.centroids = centroids;
  nav.lists.resize(c);
  CounterRng samp_rng(seed, 0x5EED0005ULL);
  for (uint32_t k = 0; k < c; ++k) {
    const auto& mem = members[k];
    if (quota[k] == 0 || mem.empty()) continue;
    if (quota[k] >= mem.size()) {
      nav.lists[k] = mem;
      continue;
    }
    double mean = 0, var = 0;
    for (uint32_t id : mem) mean += store.norms[id];
    mean /= static_cast<double>(mem.size());
    for (uint32_t id : mem) {
      double dl = store.norms[id] - mean;
      var += dl * dl;
    }
    var /= static_cast<double>(mem.size());
    double sig = std::sqrt(var);
    std::vector<std::pair<double, uint32_t>> keys;
    keys.reserve(mem.size());
    for (uint32_t id : mem) {
      double w = sig < 1e-12 ? 1.0 : phi_cdf((store.norms[id] - mean) / sig);
      double u = std::max(samp_rng.next_double(), 1e-300);
      keys.emplace_back(std::log(u) / w, id);  // maximize u^(1/w)
    }
    std::nth_element(keys.begin(), keys.begin() + quota[k], keys.end(),
                     [](const auto& a, const auto& b) {
                       if (a.first != b.first) return a.first > b.first;
                       return a.second < b.second;
                     });
    keys.resize(quota[k]);
    auto& list = nav.lists[k];
    list.reserve(quota[k]);
    for (const auto& [key, id] : keys) list.push_back(id);
    std::sort(list.begin(), list.end());
  }
  // at least one navigation node must exist
  bool any = false;
  for (const auto& l : nav.lists) any = any || !l.empty();
  if (!any) throw DataError("EmptyCluster: no navigation nodes could be sampled");
  return nav;
}

// ---- connectivity repair ------------------------------------------------

namespace {

// best-first L2 search toward `target` restricted (by construction) to nodes
// reachable from `entries`; returns the pool ascending by distance
std::vector<std::pair<float, uint32_t>> guided_l2_pool(const ProximityGraph& g,
                                                       const VectorStore& store,
                                                       std::span<const uint32_t> entries,
                                                       const float* target, uint32_t pool_cap,
                                                       std::vector<uint32_t>& stamp,
                                                       uint32_t epoch) {
  std::vector<Neighbor> pool;
  pool.reserve(entries.size() + 1);
  for (uint32_t e : entries) {
    if (stamp[e] == epoch) continue;
    stamp[e] = epoch;
    float dist = static_cast<float>(l2_distance(store.row(e), target, store.dim));
    pool.emplace_back(e, dist, true);
  }
  std::sort(pool.begin(), pool.end());
  if (pool.size() > pool_cap) pool.resize(pool_cap);
  uint32_t k = 0;
  while (k < pool.size()) {
    if (pool[k].flag) {
      pool[k].flag = false;
      uint32_t u = pool[k].id;
      uint32_t nk = static_cast<uint32_t>(pool.size());
      for (uint32_t v : g.adj[u]) {
        if (stamp[v] == epoch) continue;
        stamp[v] = epoch;
        float dist = static_cast<float>(l2_distance(store.row(v), target, store.dim));
        if (pool.size() < pool_cap) {
          Neighbor nn(v, dist, true);
          auto it = std::lower_bound(pool.begin(), pool.end(), nn);
          uint32_t rpos = static_cast<uint32_t>(it - pool.begin());
          pool.insert(it, nn);
          nk = std::min(nk, rpos);
        } else if (dist < pool.back().dist) {
          Neighbor nn(v, dist, true);
          auto it = std::lower_bound(pool.begin(), pool.end(), nn);
          uint32_t rpos = static_cast<uint32_t>(it - pool.begin());
          pool.insert(it, nn);
          pool.pop_back();
          nk = std::min(nk, rpos);
        }
      }
      k = std::min(nk, k);
    } else {
      ++k;
    }
  }
  std::vector<std::pair<float, uint32_t>> out;
  out.reserve(pool.size());
  for (const Neighbor& nb : pool) out.emplace_back(nb.dist, nb.id);
  return out;
}

}  // namespace

size_t connectivity_repair(ProximityGraph& g, const VectorStore& store,
                           std::span<const uint32_t> entries, uint32_t degree_cap) {
  const size_t n = g.n();
  if (entries.empty()) throw DataError("InvalidParam: repair needs entry nodes");
  size_t added = 0;
  std::vector<uint32_t> stamp(n, UINT32_MAX);
  uint32_t epoch = 0;
  for (int round = 0; round < 64; ++round) {
    auto hops = bfs_hops(g, entries);
    std::vector<char> reach(n);
    size_t nreach = 0;
    for (size_t i = 0; i < n; ++i) {
      reach[i] = hops[i] != UINT32_MAX;
      nreach += reach[i];
    }
    if (nreach == n) return added;
    for (size_t v = 0; v < n; ++v) {
      if (reach[v]) continue;
      ++epoch;
      auto cands = guided_l2_pool(g, store, entries, store.row(v), 64, stamp, epoch);
      uint32_t donor = UINT32_MAX;
      for (const auto& [dist, id] : cands) {
        if (g.adj[id].size() < degree_cap) {
          donor = id;
          break;
        }
      }
      if (donor == UINT32_MAX) {
        // rare: every pool candidate is full; take nearest reachable with room
        double best = 1e300;
        for (size_t u = 0; u < n; ++u) {
          if (!reach[u] || g.adj[u].size() >= degree_cap) continue;
          double dist = l2_distance(store.row(u), store.row(v), store.dim);
          if (dist < best) {
            best = dist;
            donor = static_cast<uint32_t>(u);
          }
        }
      }
      if (donor == UINT32_MAX)
        throw InternalError("connectivity repair: no reachable node has spare degree");
      g.adj[donor].push_back(static_cast<uint32_t>(v));
      ++added;
      // flood from v so its descendants are not re-attached
      std::vector<uint32_t> q{static_cast<uint32_t>(v)};
      reach[v] = 1;
      while (!q.empty()) {
        uint32_t u = q.back();
        q.pop_back();
        for (uint32_t w : g.adj[u]) {
          if (!reach[w]) {
            reach[w] = 1;
            q.push_back(w);
          }
        }
      }
    }
  }
  throw InternalError("connectivity repair did not converge");
}

// ---- full pipeline ------------------------------------------------------

PspIndex build_index(const VectorStore& store, const BuildParams& params, BuildReport* report,
                     const KnnGraph* knn_cache) {
  const size_t n = store.count();
  params.validate(n);
  BuildReport rep;

  double t0 = now_seconds();
  KnnGraph knn;
  if (knn_cache != nullptr) {
    if (knn_cache->n != n)
      throw DataError("DimMismatch: kNN cache size " + std::to_string(knn_cache->n) +
                      " vs store " + std::to_string(n));
    knn = *knn_cache;
    rep.knn_acc = 1.0;
  } else {
    uint32_t K = std::min<uint32_t>(params.K, static_cast<uint32_t>(n - 1));
    bool exact = params.knn_mode == BuildParams::KnnMode::exact ||
                 (params.knn_mode == BuildParams::KnnMode::automatic && n <= 100000);
    if (exact) {
      knn = build_exact_knn(store, K, params.threads);
    } else {
      NnDescentParams nd = params.nd;
      nd.seed = params.seed;
      nd.threads = params.threads;
      auto res = build_nndescent_knn(store, K, nd);
      rep.knn_acc = res.acc_at_k;
      rep.nndescent_iters = res.iters_run;
      if (res.acc_at_k < params.knn_acc_floor)
        throw DataError("KnnAccuracyLow: NN-descent Acc@K " + std::to_string(res.acc_at_k) +
                        " below floor " + std::to_string(params.knn_acc_floor));
      knn = std::move(res.graph);
    }
  }
  rep.knn_seconds = now_seconds() - t0;

  t0 = now_seconds();
  ProximityGraph graph = nssg_prune(knn, store, params);
  std::vector<uint32_t>().swap(knn.ids);  // release bootstrap memory
  std::vector<float>().swap(knn.dists);
  rep.prune_seconds = now_seconds() - t0;
  rep.pre_ef_degrees = degree_stats(graph);

  t0 = now_seconds();
  if (params.S > 0) apply_edge_refine(graph, store, params.S, params.alpha_deg, params.threads);
  rep.ef_seconds = now_seconds() - t0;

  t0 = now_seconds();
  uint32_t c = params.clusters ? params.clusters : params.auto_clusters(n);
  uint32_t m = params.nav_total ? params.nav_total : params.auto_nav_total(n);
  NavIvf nav = spherical_navigation(store, m, c, params.seed, params.threads, &rep.kmeans_iters);
  rep.nav_seconds = now_seconds() - t0;

  t0 = now_seconds();
  auto entry_ids = nav.all_ids();
  rep.repair_edges = connectivity_repair(graph, store, entry_ids, params.degree_cap());
  rep.repair_seconds = now_seconds() - t0;
  rep.final_degrees = degree_stats(graph);

  auto hops = bfs_hops(graph, entry_ids);
  rep.reachable_fraction =
      static_cast<double>(count_reachable(hops)) / static_cast<double>(n);
  if (rep.reachable_fraction != 1.0)
    throw InternalError("post-repair reachability below 1.0");

  PspIndex index;
  index.dim = store.dim;
  index.R = params.R;
  index.S = params.S;
  index.clusters = c;
  index.nav_total = m;
  index.alpha_millideg = static_cast<uint32_t>(std::lround(params.alpha_deg * 1000.0));
  index.graph = std::move(graph);
  index.nav = std::move(nav);
  if (report) *report = rep;
  return index;
}

}  // namespace psp
