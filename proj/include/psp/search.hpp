#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "psp/build.hpp"

namespace psp {

struct SearchParams {
  uint32_t ls = 100;  // candidate pool size
  uint32_t k = 10;    // result count
  Metric metric = Metric::ip;
  enum class Entry { sn, random } entry = Entry::sn;
  bool use_aet = false;
  // NaN = use the model's trained theta
  float theta_override = std::numeric_limits<float>::quiet_NaN();
  uint64_t seed = 1;

  void validate() const {
    if (k == 0) throw DataError("InvalidParam: k must be >= 1");
    if (ls < k) throw DataError("InvalidParam: l_s must be >= k");
  }
};

// One row per pool expansion; feeds early-termination training and the
// offline feature-replay check.
struct PopRecord {
  uint32_t node = 0;
  double ip = 0.0;
  double norm = 0.0;
  double features[4] = {0, 0, 0, 0};
  bool topk_changed = false;
  uint32_t topk_hits = 0;  // |pool top-k ∩ truth| after this expansion
};

struct SearchTrace {
  std::vector<uint32_t> visited;                    // expansion (pop) order
  std::vector<std::pair<uint32_t, double>> result;  // best k (id, score)
  size_t dc = 0;    // unique base-vector scorings
  size_t hops = 0;  // pool expansions
  uint64_t wall_ns = 0;
  bool early_terminated = false;
};

// Per-session scratch: epoch-stamped visited array + pool buffer, reused
// across queries so a sweep does no per-query allocation.
struct SearchScratch {
  std::vector<uint32_t> stamp;
  uint32_t epoch = 0;
  std::vector<Neighbor> pool;

  void ensure(size_t n) {
    if (stamp.size() != n) {
      stamp.assign(n, UINT32_MAX);
      epoch = 0;
    }
  }
  uint32_t next_epoch() {
    if (++epoch == UINT32_MAX) {
      std::fill(stamp.begin(), stamp.end(), UINT32_MAX);
      epoch = 1;
    }
    return epoch;
  }
};

// Navigation entry selection: sample without replacement from the inverted
// list of the centroid most cosine-similar to the query, topping up from
// next-closest clusters until ls ids are drawn or lists are exhausted.
std::vector<uint32_t> select_entries(const NavIvf& nav, const float* query, uint32_t dim,
                                     uint32_t ls, uint64_t seed);

// Best-first pool search. Optional hooks: pop_log records one PopRecord per
// expansion; truth_ids/truth_k let the log carry running top-k hit counts;
// shadow_dc is bumped on exactly the scorings counted in trace.dc.
SearchTrace greedy_search(const PspIndex& index, const VectorStore& store, const float* query,
                          const SearchParams& params, SearchScratch& scratch,
                          std::vector<PopRecord>* pop_log = nullptr,
                          const int32_t* truth_ids = nullptr, uint32_t truth_k = 0,
                          DcCounter* shadow_dc = nullptr);

// Pool-1 greedy walks from the same entry: inner-product ascent toward q and
// L2 descent toward mu*q. Each path is capped at max_steps nodes.
struct WalkPaths {
  std::vector<uint32_t> path_ip;
  std::vector<uint32_t> path_l2;
};
WalkPaths dual_metric_walk(const ProximityGraph& g, const VectorStore& store, const float* query,
                           uint32_t dim, double mu, uint32_t entry, uint32_t max_steps = 15);

}  // namespace psp
