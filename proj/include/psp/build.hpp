#pragma once

#include <optional>

#include "psp/aet.hpp"
#include "psp/graph.hpp"
#include "psp/knn_graph.hpp"
#include "psp/vecstore.hpp"

namespace psp {

struct BuildParams {
  uint32_t K = 400;
  uint32_t L = 800;
  uint32_t R = 40;
  double alpha_deg = 60.0;
  uint32_t S = 5;        // EF quota; 0 disables the EF stage entirely
  uint32_t clusters = 0;  // SN c; 0 = auto (64 for n >= 1e5, else max(8, n/16384))
  uint32_t nav_total = 0;  // SN m; 0 = auto (min(4096, n))
  uint64_t seed = 1;
  int threads = 0;

  enum class KnnMode { automatic, exact, nndescent };
  KnnMode knn_mode = KnnMode::automatic;
  NnDescentParams nd;        // seed/threads copied from above at build time
  double knn_acc_floor = 0.95;

  void validate(size_t n) const;
  uint32_t auto_clusters(size_t n) const;
  uint32_t auto_nav_total(size_t n) const;
  uint32_t degree_cap() const { return R + S; }
};

// Unit-norm centroids plus disjoint per-cluster navigation-id lists.
struct NavIvf {
  uint32_t dim = 0;
  std::vector<float> centroids;  // c * dim
  std::vector<std::vector<uint32_t>> lists;

  uint32_t c() const { return static_cast<uint32_t>(lists.size()); }
  const float* centroid(uint32_t i) const { return centroids.data() + static_cast<size_t>(i) * dim; }
  std::vector<uint32_t> all_ids() const;
};

struct PspIndex {
  uint32_t dim = 0;
  uint32_t R = 0, S = 0;
  uint32_t clusters = 0, nav_total = 0;
  uint32_t alpha_millideg = 0;
  ProximityGraph graph;
  NavIvf nav;
  std::optional<AetModel> aet;

  size_t n() const { return graph.n(); }
};

struct BuildReport {
  double knn_seconds = 0, prune_seconds = 0, ef_seconds = 0, nav_seconds = 0,
         repair_seconds = 0;
  double knn_acc = 1.0;
  uint32_t nndescent_iters = 0;
  DegreeStats pre_ef_degrees, final_degrees;
  size_t repair_edges = 0;
  double reachable_fraction = 0;
  uint32_t kmeans_iters = 0;
};

// NSSG selection: candidates = kNN row ∪ neighbors-of-neighbors, L closest by
// L2; greedy ascending-distance admission requiring pairwise difference-vector
// angles >= alpha; at most R kept.
ProximityGraph nssg_prune(const KnnGraph& knn, const VectorStore& store, const BuildParams& params);

// Unbounded variant: every other node is a candidate, no degree cap (the
// "ideal" graph of the theory experiments). Quadratic — keep n small.
ProximityGraph ideal_prune(const VectorStore& store, double alpha_deg, int threads = 0);

// One node's refined row: 2-hop candidates sorted by descending ⟨node, cand⟩;
// top-1 always admitted, further candidates need origin-angle >= alpha against
// every previously admitted one; at most S admissions, then dedup-merge.
std::vector<uint32_t> edge_refine(const ProximityGraph& g, const VectorStore& store, uint32_t node,
                                  uint32_t S, double alpha_deg);

// EF over all nodes against a frozen snapshot of g.
void apply_edge_refine(ProximityGraph& g, const VectorStore& store, uint32_t S, double alpha_deg,
                       int threads = 0);

NavIvf spherical_navigation(const VectorStore& store, uint32_t m, uint32_t c, uint64_t seed,
                            int threads = 0, uint32_t* kmeans_iters_out = nullptr);

// Adds one in-edge (from the nearest reachable node with spare degree) to
// every node not BFS-reachable from `entries`; repeats until all reachable.
// Returns number of edges added.
size_t connectivity_repair(ProximityGraph& g, const VectorStore& store,
                           std::span<const uint32_t> entries, uint32_t degree_cap);

PspIndex build_index(const VectorStore& store, const BuildParams& params,
                     BuildReport* report = nullptr, const KnnGraph* knn_cache = nullptr);

}  // namespace psp
