#include <algorithm>
#include <filesystem>

#include "doctest.h"
#include "psp/oracle.hpp"
#include "psp/synth.hpp"

using namespace psp;

namespace {

VectorStore make_store(uint32_t d, std::initializer_list<std::initializer_list<float>> rows) {
  VectorStore s;
  s.dim = d;
  for (auto& r : rows) s.data.insert(s.data.end(), r.begin(), r.end());
  s.finalize();
  return s;
}

// independent reference: full sort with the same ordering contract
std::vector<int32_t> naive_topk(const VectorStore& store, const float* q, uint32_t k,
                                Metric metric) {
  double qn = 0;
  for (uint32_t j = 0; j < store.dim; ++j) qn += double(q[j]) * q[j];
  qn = std::sqrt(qn);
  std::vector<std::pair<double, int32_t>> all;
  for (size_t i = 0; i < store.count(); ++i)
    all.emplace_back(metric_score(metric, store.row(i), q, store.dim, store.norms[i], qn), i);
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int32_t> out;
  for (uint32_t i = 0; i < k; ++i) out.push_back(all[i].second);
  return out;
}

}  // namespace

TEST_CASE("brute_topk hand example with ties") {
  // ips with q=(1,0): 2, 5, 5, -1  ->  order 1, 2 (tie toward smaller id), 0, 3
  VectorStore s = make_store(2, {{2, 1}, {5, 0}, {5, 9}, {-1, 0}});
  float q[2] = {1, 0};
  auto top = brute_topk(s, q, 1.0, 4, Metric::ip);
  REQUIRE(top.size() == 4);
  CHECK(top[0].first == 1);
  CHECK(top[1].first == 2);
  CHECK(top[2].first == 0);
  CHECK(top[3].first == 3);
  CHECK(top[0].second == 5.0);
  CHECK(top[3].second == -1.0);

  CHECK_THROWS_AS(brute_topk(s, q, 1.0, 5, Metric::ip), DataError);
}

TEST_CASE("brute_topk l2 prefers the point itself") {
  VectorStore s = make_store(2, {{0, 0}, {1, 1}, {3, 3}});
  float q[2] = {1, 1};
  auto top = brute_topk(s, q, std::sqrt(2.0), 2, Metric::l2);
  CHECK(top[0].first == 1);
  CHECK(top[0].second == 0.0);  // larger-is-better score, -distance
  CHECK(top[1].first == 0);
}

TEST_CASE("brute force agrees with an independent sort on random data") {
  SynthSpec spec;
  spec.kind = SynthKind::gaussian;
  spec.n = 500;
  spec.d = 8;
  spec.seed = 99;
  VectorStore base = synth_generate(spec);
  spec.n = 20;
  spec.seed = 100;
  QuerySet queries = synth_generate(spec);

  for (Metric m : {Metric::ip, Metric::l2, Metric::cosine}) {
    GroundTruth gt = brute_topk_all(base, queries, 10, m);
    REQUIRE(gt.count == 20);
    REQUIRE(gt.k == 10);
    for (size_t qi = 0; qi < queries.count(); ++qi) {
      auto expect = naive_topk(base, queries.row(qi), 10, m);
      auto got = gt.row(qi);
      for (uint32_t r = 0; r < 10; ++r) CHECK(got[r] == expect[r]);
    }
  }
}

TEST_CASE("recall_at_k hand values") {
  std::vector<int32_t> truth = {1, 2, 3, 4};
  std::vector<int32_t> ret_all = {4, 3, 2, 1};
  std::vector<int32_t> ret_half = {1, 2, 9, 8};
  std::vector<int32_t> ret_none = {7, 8, 9, 10};
  CHECK(recall_at_k(ret_all, truth) == 1.0);
  CHECK(recall_at_k(ret_half, truth) == 0.5);
  CHECK(recall_at_k(ret_none, truth) == 0.0);
}

TEST_CASE("ground truth ivecs roundtrip") {
  VectorStore base = make_store(2, {{1, 0}, {0, 1}, {2, 2}});
  QuerySet q = make_store(2, {{1, 0}, {0, 1}});
  GroundTruth gt = brute_topk_all(base, q, 2, Metric::ip);
  std::string path = (std::filesystem::temp_directory_path() / "truth.ivecs").string();
  truth_to_ivecs(gt, path);
  GroundTruth back = truth_from_ivecs(path);
  CHECK(back.k == gt.k);
  CHECK(back.count == gt.count);
  CHECK(back.ids == gt.ids);
}
