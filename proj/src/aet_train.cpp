#include "psp/aet_train.hpp"

#include <omp.h>

#include <algorithm>
#include <numeric>

#include "psp/oracle.hpp"
#include "psp/rng.hpp"

namespace psp {

namespace {

VectorStore gather_rows(const VectorStore& store, const std::vector<uint32_t>& ids) {
  VectorStore out;
  out.dim = store.dim;
  out.data.reserve(static_cast<size_t>(ids.size()) * store.dim);
  for (uint32_t id : ids)
    out.data.insert(out.data.end(), store.row(id), store.row(id) + store.dim);
  out.finalize();
  return out;
}

}  // namespace

std::vector<TrainRow> aet_training_rows(const VectorStore& store, const AetTrainParams& params,
                                        AetTrainReport* report) {
  params.validate();
  const size_t n = store.count();
  if (n < 64) throw DataError("InvalidParam: store too small to split for training");

  // seeded shuffle -> base/query split
  std::vector<uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  CounterRng shuffle_rng(params.seed, 0xAB0ULL);
  for (size_t i = n - 1; i > 0; --i) {
    uint32_t j = shuffle_rng.next_below(static_cast<uint32_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  const size_t base_count = static_cast<size_t>(params.split * static_cast<double>(n));
  if (base_count < 32 || base_count >= n)
    throw DataError("InvalidParam: split leaves too few rows on one side");
  std::vector<uint32_t> base_ids(perm.begin(), perm.begin() + base_count);
  std::vector<uint32_t> query_ids(perm.begin() + base_count, perm.end());
  std::sort(base_ids.begin(), base_ids.end());
  std::sort(query_ids.begin(), query_ids.end());

  VectorStore base = gather_rows(store, base_ids);
  VectorStore queries = gather_rows(store, query_ids);

  BuildParams bp = params.build;
  bp.seed = params.seed;
  PspIndex index = build_index(base, bp);
  GroundTruth truth = brute_topk_all(base, queries, params.k, Metric::ip);

  const size_t q = queries.count();
  AetTrainReport rep;
  rep.queries = q;
  std::vector<std::vector<TrainRow>> per_query(q);
  std::vector<char> degenerate(q, 0);

#pragma omp parallel
  {
    SearchScratch scratch;
    std::vector<PopRecord> log;
#pragma omp for schedule(dynamic, 8)
    for (int64_t qi = 0; qi < static_cast<int64_t>(q); ++qi) {
      SearchParams sp;
      sp.ls = params.ls;
      sp.k = params.k;
      sp.metric = Metric::ip;
      sp.entry = SearchParams::Entry::sn;
      sp.use_aet = false;
      sp.seed = params.seed ^ splitmix64(static_cast<uint64_t>(qi));
      log.clear();
      greedy_search(index, base, queries.row(static_cast<uint32_t>(qi)), sp, scratch, &log,
                    truth.row(static_cast<uint32_t>(qi)).data(), params.k);

      // boundary = last pop at which the running top-k hit count increases
      int64_t boundary = -1;
      uint32_t prev = 0;
      for (size_t t = 0; t < log.size(); ++t) {
        if (log[t].topk_hits > prev) boundary = static_cast<int64_t>(t);
        prev = std::max(prev, log[t].topk_hits);
      }
      if (boundary < 0) {
        degenerate[qi] = 1;
        continue;
      }
      CounterRng side_rng(params.seed, 0xB0D1ULL + static_cast<uint64_t>(qi));
      auto sample_side = [&](size_t lo, size_t hi, int label) {  // [lo, hi)
        size_t count = hi > lo ? hi - lo : 0;
        if (count == 0) return;
        auto picks = sample_distinct(side_rng, static_cast<uint32_t>(count),
                                     std::min<uint32_t>(params.samples_per_side,
                                                        static_cast<uint32_t>(count)));
        for (uint32_t off : picks) {
          const PopRecord& rec = log[lo + off];
          TrainRow row;
          std::copy(rec.features, rec.features + 4, row.f.begin());
          row.label = label;
          per_query[qi].push_back(row);
        }
      };
      sample_side(0, static_cast<size_t>(boundary), 1);
      sample_side(static_cast<size_t>(boundary) + 1, log.size(), 0);
    }
  }

  std::vector<TrainRow> pos, neg;
  for (size_t qi = 0; qi < q; ++qi) {
    rep.degenerate += degenerate[qi];
    for (const TrainRow& row : per_query[qi]) (row.label == 1 ? pos : neg).push_back(row);
  }

  // balance by downsampling the majority class
  CounterRng bal_rng(params.seed, 0xBA1ULL);
  auto downsample = [&](std::vector<TrainRow>& major, size_t target) {
    auto keep = sample_distinct(bal_rng, static_cast<uint32_t>(major.size()),
                                static_cast<uint32_t>(target));
    std::sort(keep.begin(), keep.end());
    std::vector<TrainRow> kept;
    kept.reserve(target);
    for (uint32_t i : keep) kept.push_back(major[i]);
    major = std::move(kept);
  };
  if (pos.size() > neg.size() && !neg.empty()) downsample(pos, neg.size());
  else if (neg.size() > pos.size() && !pos.empty()) downsample(neg, pos.size());

  std::vector<TrainRow> rows;
  rows.reserve(pos.size() + neg.size());
  rows.insert(rows.end(), pos.begin(), pos.end());
  rows.insert(rows.end(), neg.begin(), neg.end());
  rep.pos_rows = pos.size();
  rep.neg_rows = neg.size();
  size_t total = rows.size();
  rep.class_prior = total == 0 ? 0.0
                               : static_cast<double>(std::max(pos.size(), neg.size())) /
                                     static_cast<double>(total);
  if (report) *report = rep;
  return rows;
}

AetModel train_aet(const VectorStore& store, const AetTrainParams& params,
                   AetTrainReport* report) {
  AetTrainReport rep;
  std::vector<TrainRow> rows = aet_training_rows(store, params, &rep);
  if (rows.empty()) throw DataError("SingleClassData: no labeled rows were produced");

  // held-out accuracy estimate from a 90/10 row split
  std::vector<uint32_t> perm(rows.size());
  std::iota(perm.begin(), perm.end(), 0u);
  CounterRng rng(params.seed, 0xE7A1ULL);
  for (size_t i = perm.size() - 1; i > 0; --i) {
    uint32_t j = rng.next_below(static_cast<uint32_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  size_t fit_count = std::max<size_t>(1, rows.size() * 9 / 10);
  std::vector<TrainRow> fit, held;
  for (size_t i = 0; i < perm.size(); ++i)
    (i < fit_count ? fit : held).push_back(rows[perm[i]]);
  bool fit_has_both = false;
  {
    bool has0 = false, has1 = false;
    for (const auto& row : fit) (row.label ? has1 : has0) = true;
    fit_has_both = has0 && has1;
  }
  if (!held.empty() && fit_has_both) {
    AetModel probe = train_tree(fit, 4, params.theta);
    size_t correct = 0;
    for (const TrainRow& row : held) {
      FeatureState st;
      std::copy(row.f.begin(), row.f.end(), st.f.begin());
      bool stop = aet_evaluate(probe, st);
      if (stop == (row.label == 0)) ++correct;
    }
    rep.heldout_accuracy = static_cast<double>(correct) / static_cast<double>(held.size());
  }

  AetModel model = train_tree(rows, 4, params.theta);
  rep.tree_nodes = model.nodes.size();
  if (report) *report = rep;
  return model;
}

}  // namespace psp
