#pragma once

#include <span>

#include "psp/common.hpp"

namespace psp {

// Directed adjacency, one out-edge row per node. Mutable during construction,
// frozen (and CSR-packed) at persistence time.
struct ProximityGraph {
  std::vector<std::vector<uint32_t>> adj;

  size_t n() const { return adj.size(); }
  std::span<const uint32_t> row(size_t i) const { return {adj[i].data(), adj[i].size()}; }
};

struct DegreeStats {
  double mean = 0, stddev = 0;
  uint32_t min = 0, max = 0;
};

DegreeStats degree_stats(const ProximityGraph& g);

// Forward-BFS from `sources`; out[i] = hop count or UINT32_MAX if unreachable.
std::vector<uint32_t> bfs_hops(const ProximityGraph& g, std::span<const uint32_t> sources);

size_t count_reachable(const std::vector<uint32_t>& hops);

// mean directed edge density among each sampled node's out-neighbors
double sampled_clustering_coefficient(const ProximityGraph& g, uint32_t sample, uint64_t seed);

}  // namespace psp
