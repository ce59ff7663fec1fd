#pragma once

#include "psp/search.hpp"

namespace psp {

struct AetTrainParams {
  double split = 0.9;             // fraction of rows kept as the training base
  uint32_t k = 100;               // recall target the boundary is measured at
  uint32_t ls = 500;              // generous pool for trace generation
  float theta = 2.0f;
  uint32_t samples_per_side = 8;  // rows sampled before/after the boundary
  uint64_t seed = 1;
  BuildParams build;              // used for the split-base index

  void validate() const {
    if (!(split > 0.0 && split < 1.0))
      throw DataError("InvalidParam: split must lie in (0, 1)");
    if (k == 0 || ls < k) throw DataError("InvalidParam: need l_s >= k >= 1");
    if (samples_per_side == 0)
      throw DataError("InvalidParam: samples_per_side must be positive");
  }
};

struct AetTrainReport {
  size_t queries = 0;
  size_t degenerate = 0;  // queries whose recall never rose; skipped
  size_t pos_rows = 0;    // label 1 = continue
  size_t neg_rows = 0;    // label 0 = stop
  double heldout_accuracy = 0.0;
  double class_prior = 0.0;  // majority-class fraction of the final row set
  size_t tree_nodes = 0;
};

// Splits the store by seed, builds a scaled index on the base side, traces
// AET-off searches for the held-out queries, and labels pops around each
// query's recall boundary (strictly before → continue, strictly after →
// stop, the boundary pop itself excluded). Classes are balanced by
// downsampling the majority.
std::vector<TrainRow> aet_training_rows(const VectorStore& store, const AetTrainParams& params,
                                        AetTrainReport* report = nullptr);

// Full pipeline: rows -> tree (with a 90/10 held-out accuracy estimate).
AetModel train_aet(const VectorStore& store, const AetTrainParams& params,
                   AetTrainReport* report = nullptr);

}  // namespace psp
