#include "psp/knn_graph.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cstring>
#include <fstream>

#include "psp/rng.hpp"

namespace psp {

namespace {

struct Spinlock {
  std::atomic_flag f = ATOMIC_FLAG_INIT;
  void lock() {
    while (f.test_and_set(std::memory_order_acquire)) {}
  }
  void unlock() { f.clear(std::memory_order_release); }
};

// sorted bounded row of (dist, id), ascending, ties toward smaller id
struct BoundedRow {
  std::vector<std::pair<float, uint32_t>> v;
  uint32_t cap;
  explicit BoundedRow(uint32_t K) : cap(K) { v.reserve(K + 1); }
  void offer(float dist, uint32_t id) {
    std::pair<float, uint32_t> cand{dist, id};
    if (v.size() == cap && !(cand < v.back())) return;
    v.insert(std::upper_bound(v.begin(), v.end(), cand), cand);
    if (v.size() > cap) v.pop_back();
  }
};

void check_k(size_t n, uint32_t K) {
  if (K == 0) throw DataError("InvalidParam: K=0");
  if (K >= n)
    throw DataError("KTooLarge: K=" + std::to_string(K) + " with only " + std::to_string(n) +
                    " points (self excluded)");
}

// K distinct ids in [0,n) \ {self}; no allocation beyond `out`
void draw_distinct(CounterRng& rng, uint32_t n, uint32_t self, uint32_t K,
                   std::vector<uint32_t>& out) {
  out.clear();
  while (out.size() < K) {
    uint32_t v = rng.next_below(n);
    if (v == self) continue;
    bool dup = false;
    for (uint32_t w : out)
      if (w == v) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(v);
  }
}

}  // namespace

KnnGraph build_exact_knn(const VectorStore& store, uint32_t K, int threads) {
  const size_t n = store.count();
  check_k(n, K);
  if (threads > 0) omp_set_num_threads(threads);
  std::vector<BoundedRow> rows(n, BoundedRow(K));
  if (omp_get_max_threads() == 1) {
    // one pass over unordered pairs, feeding both endpoints
    for (size_t i = 0; i < n; ++i) {
      const float* pi = store.row(i);
      for (size_t j = i + 1; j < n; ++j) {
        float d = static_cast<float>(l2_distance(pi, store.row(j), store.dim));
        rows[i].offer(d, static_cast<uint32_t>(j));
        rows[j].offer(d, static_cast<uint32_t>(i));
      }
    }
  } else {
#pragma omp parallel for schedule(dynamic, 64)
    for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
      const float* pi = store.row(i);
      for (size_t j = 0; j < n; ++j) {
        if (j == static_cast<size_t>(i)) continue;
        float d = static_cast<float>(l2_distance(pi, store.row(j), store.dim));
        rows[i].offer(d, static_cast<uint32_t>(j));
      }
    }
  }
  KnnGraph g;
  g.K = K;
  g.n = n;
  g.ids.resize(n * K);
  g.dists.resize(n * K);
  for (size_t i = 0; i < n; ++i) {
    for (uint32_t r = 0; r < K; ++r) {
      g.ids[i * K + r] = rows[i].v[r].second;
      g.dists[i * K + r] = rows[i].v[r].first;
    }
  }
  return g;
}

namespace {

// exact KNN restricted to `sample` rows, for accuracy audits
double knn_accuracy_on_sample(const VectorStore& store, const KnnGraph& g,
                              const std::vector<uint32_t>& sample) {
  const size_t n = store.count();
  double acc_sum = 0.0;
#pragma omp parallel for schedule(dynamic, 4) reduction(+ : acc_sum)
  for (int64_t s = 0; s < static_cast<int64_t>(sample.size()); ++s) {
    uint32_t i = sample[s];
    BoundedRow exact(g.K);
    const float* pi = store.row(i);
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      exact.offer(static_cast<float>(l2_distance(pi, store.row(j), store.dim)),
                  static_cast<uint32_t>(j));
    }
    size_t hit = 0;
    auto row = g.row(i);
    for (uint32_t r = 0; r < g.K; ++r) {
      uint32_t want = exact.v[r].second;
      if (std::find(row.begin(), row.end(), want) != row.end()) ++hit;
    }
    acc_sum += static_cast<double>(hit) / g.K;
  }
  return sample.empty() ? 1.0 : acc_sum / static_cast<double>(sample.size());
}

}  // namespace

NnDescentResult build_nndescent_knn(const VectorStore& store, uint32_t K,
                                    const NnDescentParams& params) {
  const size_t n = store.count();
  check_k(n, K);
  if (params.threads > 0) omp_set_num_threads(params.threads);
  const uint32_t S = std::max<uint32_t>(1, static_cast<uint32_t>(params.sample_rate * K + 0.5));

  std::vector<Neighbor> pool(n * K);
  std::vector<Spinlock> locks(n);

  // random bootstrap
#pragma omp parallel
  {
    std::vector<uint32_t> draw;
#pragma omp for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
      CounterRng rng(params.seed, 0x1000000ULL + i);
      draw_distinct(rng, static_cast<uint32_t>(n), static_cast<uint32_t>(i), K, draw);
      Neighbor* row = pool.data() + i * K;
      for (uint32_t r = 0; r < K; ++r)
        row[r] = Neighbor(draw[r],
                          static_cast<float>(l2_distance(store.row(i), store.row(draw[r]),
                                                         store.dim)),
                          true);
      std::sort(row, row + K);
    }
  }

  std::vector<std::vector<uint32_t>> nn_new(n), nn_old(n), rnn_new(n), rnn_old(n);
  auto try_insert = [&](uint32_t a, uint32_t b, float dist) -> bool {
    Neighbor* row = pool.data() + static_cast<size_t>(a) * K;
    if (dist >= row[K - 1].dist) return false;  // cheap reject without lock
    locks[a].lock();
    bool dup = false;
    for (uint32_t r = 0; r < K; ++r)
      if (row[r].id == b) {
        dup = true;
        break;
      }
    bool inserted = false;
    if (!dup && dist < row[K - 1].dist) {
      unsigned pos = insert_into_pool(row, K - 1, Neighbor(b, dist, true));
      inserted = pos < K;
    }
    locks[a].unlock();
    return inserted;
  };

  uint32_t iter = 0;
  for (; iter < params.iters; ++iter) {
    // phase A: per-node forward lists from own pool (deterministic per node)
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
      auto& nnew = nn_new[i];
      auto& nold = nn_old[i];
      nnew.clear();
      nold.clear();
      Neighbor* row = pool.data() + static_cast<size_t>(i) * K;
      for (uint32_t r = 0; r < K && nnew.size() < S; ++r) {
        if (row[r].flag) {
          nnew.push_back(row[r].id);
          row[r].flag = false;
        }
      }
      for (uint32_t r = 0; r < K && nold.size() < 2 * S; ++r)
        if (!row[r].flag) {
          bool sampled = false;
          for (uint32_t v : nnew)
            if (v == row[r].id) {
              sampled = true;
              break;
            }
          if (!sampled) nold.push_back(row[r].id);
        }
    }
    // phase B: reverse lists, then sampled merge
    for (size_t i = 0; i < n; ++i) {
      rnn_new[i].clear();
      rnn_old[i].clear();
    }
    for (size_t i = 0; i < n; ++i) {
      for (uint32_t v : nn_new[i]) rnn_new[v].push_back(static_cast<uint32_t>(i));
      for (uint32_t v : nn_old[i]) rnn_old[v].push_back(static_cast<uint32_t>(i));
    }
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
      CounterRng rng(params.seed, 0x2000000ULL + iter * n + i);
      auto merge_sampled = [&](std::vector<uint32_t>& dst, std::vector<uint32_t>& rev) {
        if (rev.size() > S) {  // reservoir-style cap
          for (uint32_t r = 0; r < S; ++r) {
            uint32_t j = r + rng.next_below(static_cast<uint32_t>(rev.size() - r));
            std::swap(rev[r], rev[j]);
          }
          rev.resize(S);
        }
        dst.insert(dst.end(), rev.begin(), rev.end());
      };
      merge_sampled(nn_new[i], rnn_new[i]);
      merge_sampled(nn_old[i], rnn_old[i]);
    }
    // phase C: local joins
    std::atomic<uint64_t> updates{0};
#pragma omp parallel for schedule(dynamic, 256)
    for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
      const auto& nnew = nn_new[i];
      const auto& nold = nn_old[i];
      uint64_t local = 0;
      for (size_t a = 0; a < nnew.size(); ++a) {
        uint32_t u = nnew[a];
        for (size_t b = a + 1; b < nnew.size(); ++b) {
          uint32_t v = nnew[b];
          if (u == v) continue;
          float d = static_cast<float>(l2_distance(store.row(u), store.row(v), store.dim));
          local += try_insert(u, v, d);
          local += try_insert(v, u, d);
        }
        for (uint32_t v : nold) {
          if (u == v) continue;
          float d = static_cast<float>(l2_distance(store.row(u), store.row(v), store.dim));
          local += try_insert(u, v, d);
          local += try_insert(v, u, d);
        }
      }
      updates += local;
    }
    if (static_cast<double>(updates.load()) < params.delta * static_cast<double>(n) * K) {
      ++iter;
      break;
    }
  }

  // release join scaffolding before materializing the output rows
  for (auto* lists : {&nn_new, &nn_old, &rnn_new, &rnn_old})
    std::vector<std::vector<uint32_t>>().swap(*lists);

  NnDescentResult res;
  res.iters_run = iter;
  res.graph.K = K;
  res.graph.n = n;
  res.graph.ids.resize(n * K);
  res.graph.dists.resize(n * K);
  for (size_t i = 0; i < n; ++i) {
    const Neighbor* row = pool.data() + i * K;
    for (uint32_t r = 0; r < K; ++r) {
      res.graph.ids[i * K + r] = row[r].id;
      res.graph.dists[i * K + r] = row[r].dist;
    }
  }

  if (params.accuracy_sample > 0) {
    CounterRng rng(params.seed, 0xACCULL);
    auto sample = sample_distinct(rng, static_cast<uint32_t>(n),
                                  std::min<uint32_t>(params.accuracy_sample,
                                                     static_cast<uint32_t>(n)));
    res.acc_at_k = knn_accuracy_on_sample(store, res.graph, sample);
  }
  return res;
}

// ---- cache --------------------------------------------------------------

static const char kKnnMagic[4] = {'K', 'N', 'N', '1'};

void save_knn_cache(const KnnGraph& g, const std::string& path) {
  std::vector<char> buf;
  buf.reserve(16 + g.ids.size() * 8);
  buf.insert(buf.end(), kKnnMagic, kKnnMagic + 4);
  uint64_t n64 = g.n;
  uint32_t k32 = g.K;
  buf.insert(buf.end(), reinterpret_cast<char*>(&n64), reinterpret_cast<char*>(&n64) + 8);
  buf.insert(buf.end(), reinterpret_cast<char*>(&k32), reinterpret_cast<char*>(&k32) + 4);
  const char* idp = reinterpret_cast<const char*>(g.ids.data());
  buf.insert(buf.end(), idp, idp + g.ids.size() * 4);
  const char* dp = reinterpret_cast<const char*>(g.dists.data());
  buf.insert(buf.end(), dp, dp + g.dists.size() * 4);
  atomic_write_file(path, buf.data(), buf.size());
}

KnnGraph load_knn_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("FileNotFound: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kKnnMagic, 4) != 0)
    throw DataError("BadMagic: " + path + " is not a KNN cache");
  uint64_t n64 = 0;
  uint32_t k32 = 0;
  if (!in.read(reinterpret_cast<char*>(&n64), 8) || !in.read(reinterpret_cast<char*>(&k32), 4))
    throw DataError("MalformedRecord: truncated KNN header in " + path);
  KnnGraph g;
  g.n = n64;
  g.K = k32;
  if (g.K == 0 || g.n == 0 || g.K >= g.n)
    throw DataError("MalformedRecord: implausible KNN header in " + path);
  size_t cells = g.n * static_cast<size_t>(g.K);
  g.ids.resize(cells);
  g.dists.resize(cells);
  if (!in.read(reinterpret_cast<char*>(g.ids.data()), cells * 4) ||
      !in.read(reinterpret_cast<char*>(g.dists.data()), cells * 4))
    throw DataError("MalformedRecord: truncated KNN payload in " + path);
  for (size_t i = 0; i < g.n; ++i)
    for (uint32_t r = 0; r < g.K; ++r)
      if (g.ids[i * g.K + r] >= g.n)
        throw DataError("MalformedRecord: KNN id out of range in " + path);
  return g;
}

}  // namespace psp
