#pragma once

#include <string>

#include "psp/aet_train.hpp"
#include "psp/oracle.hpp"
#include "psp/search.hpp"

namespace psp {

struct BenchRow {
  uint32_t ls = 0;
  bool aet = false;
  double recall_mean = 0.0;
  double qps = 0.0;
  double mean_dc = 0.0;
  double median_dc = 0.0;
  double mean_hops = 0.0;  // pool expansions per query
  double mean_wall_ns = 0.0;
  uint64_t p50_ns = 0;
  uint64_t p99_ns = 0;
};

struct BenchReport {
  std::string dataset;
  uint32_t k = 0;
  Metric metric = Metric::ip;
  std::vector<BenchRow> rows;  // sorted by (ls, aet)
};

// One timed operating point. The query loop is single-threaded by contract;
// timing covers entry selection, scoring, and feature updates.
BenchRow bench_point(const PspIndex& index, const VectorStore& store, const QuerySet& queries,
                     const GroundTruth& truth, uint32_t k, uint32_t ls, Metric metric,
                     SearchParams::Entry entry, bool aet, float theta_override, uint64_t seed);

// aet_mode: 0 = off, 1 = on, 2 = both (off row then on row per ls).
BenchReport run_sweep(const PspIndex& index, const VectorStore& store, const QuerySet& queries,
                      const GroundTruth& truth, uint32_t k, const std::vector<uint32_t>& ls_list,
                      int aet_mode, Metric metric = Metric::ip,
                      SearchParams::Entry entry = SearchParams::Entry::sn, uint64_t seed = 1);

// Exhaustive-scan reference row: recall 1.0 by construction, dc = n.
BenchRow brute_force_row(const VectorStore& store, const QuerySet& queries,
                         const GroundTruth& truth, uint32_t k, Metric metric);

struct OperatingPoint {
  BenchRow row;
  bool met = false;  // target recall reached within the ls grid
};

// Smallest ls in the (ascending) grid whose mean recall reaches target;
// if none does, the largest-ls row is returned with met = false.
OperatingPoint operating_point(const PspIndex& index, const VectorStore& store,
                               const QuerySet& queries, const GroundTruth& truth, uint32_t k,
                               const std::vector<uint32_t>& ls_grid, double target_recall,
                               Metric metric, SearchParams::Entry entry, bool aet,
                               float theta_override, uint64_t seed);

struct AblationRow {
  std::string variant;
  OperatingPoint at;
};

struct AblationReport {
  double target_recall = 0.0;
  std::vector<AblationRow> rows;  // base, +EF, +SN, +AET, full
};

// Five single-toggle variants built from one kNN bootstrap and seed; each is
// reported at its matched-recall operating point.
AblationReport ablation_matrix(const VectorStore& store, const QuerySet& queries, uint32_t k,
                               const BuildParams& base_params, const AetTrainParams& aet_params,
                               const std::vector<uint32_t>& ls_grid, double target_recall,
                               uint64_t seed);

}  // namespace psp
