#include "psp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_set>

#include "psp/rng.hpp"

namespace psp {

DegreeStats degree_stats(const ProximityGraph& g) {
  DegreeStats st;
  if (g.n() == 0) return st;
  st.min = UINT32_MAX;
  double sum = 0, sum2 = 0;
  for (const auto& row : g.adj) {
    uint32_t d = static_cast<uint32_t>(row.size());
    sum += d;
    sum2 += static_cast<double>(d) * d;
    st.min = std::min(st.min, d);
    st.max = std::max(st.max, d);
  }
  double n = static_cast<double>(g.n());
  st.mean = sum / n;
  st.stddev = std::sqrt(std::max(0.0, sum2 / n - st.mean * st.mean));
  return st;
}

std::vector<uint32_t> bfs_hops(const ProximityGraph& g, std::span<const uint32_t> sources) {
  std::vector<uint32_t> hops(g.n(), UINT32_MAX);
  std::deque<uint32_t> q;
  for (uint32_t s : sources) {
    if (s >= g.n()) throw DataError("InvalidParam: BFS source out of range");
    if (hops[s] == UINT32_MAX) {
      hops[s] = 0;
      q.push_back(s);
    }
  }
  while (!q.empty()) {
    uint32_t u = q.front();
    q.pop_front();
    for (uint32_t v : g.adj[u]) {
      if (hops[v] == UINT32_MAX) {
        hops[v] = hops[u] + 1;
        q.push_back(v);
      }
    }
  }
  return hops;
}

size_t count_reachable(const std::vector<uint32_t>& hops) {
  size_t c = 0;
  for (uint32_t h : hops)
    if (h != UINT32_MAX) ++c;
  return c;
}

double sampled_clustering_coefficient(const ProximityGraph& g, uint32_t sample, uint64_t seed) {
  if (g.n() == 0) return 0.0;
  CounterRng rng(seed, 0xC1C0ULL);
  auto nodes = sample_distinct(rng, static_cast<uint32_t>(g.n()),
                               std::min<uint32_t>(sample, static_cast<uint32_t>(g.n())));
  double sum = 0.0;
  size_t used = 0;
  for (uint32_t v : nodes) {
    const auto& nb = g.adj[v];
    if (nb.size() < 2) continue;
    std::unordered_set<uint32_t> nbset(nb.begin(), nb.end());
    size_t links = 0;
    for (uint32_t x : nb)
      for (uint32_t y : g.adj[x])
        if (y != v && nbset.count(y)) ++links;
    sum += static_cast<double>(links) /
           (static_cast<double>(nb.size()) * (static_cast<double>(nb.size()) - 1));
    ++used;
  }
  return used == 0 ? 0.0 : sum / static_cast<double>(used);
}

}  // namespace psp
