#include <algorithm>
#include <set>

#include "doctest.h"
#include "psp/oracle.hpp"
#include "psp/search.hpp"
#include "psp/synth.hpp"

using namespace psp;

namespace {

VectorStore make_store(uint32_t d, std::vector<std::vector<float>> rows) {
  VectorStore s;
  s.dim = d;
  for (auto& r : rows) s.data.insert(s.data.end(), r.begin(), r.end());
  s.finalize();
  return s;
}

// minimal index wrapper: given graph + one trivial navigation cluster
PspIndex wrap_index(const VectorStore& s, ProximityGraph g,
                    std::vector<uint32_t> nav_list) {
  PspIndex idx;
  idx.dim = s.dim;
  idx.R = 8;
  idx.S = 8;
  idx.graph = std::move(g);
  idx.nav.dim = s.dim;
  idx.nav.centroids.assign(s.dim, 0.f);
  idx.nav.centroids[0] = 1.f;
  idx.nav.lists = {std::move(nav_list)};
  idx.clusters = 1;
  idx.nav_total = static_cast<uint32_t>(idx.nav.lists[0].size());
  return idx;
}

PspIndex build_gaussian_index(VectorStore& store_out, size_t n = 2000, uint64_t seed = 5) {
  SynthSpec spec;
  spec.kind = SynthKind::gaussian;
  spec.n = n;
  spec.d = 8;
  spec.seed = seed;
  store_out = synth_generate(spec);
  BuildParams p;
  p.K = 20;
  p.L = 40;
  p.R = 12;
  p.S = 3;
  p.clusters = 8;
  p.nav_total = 64;
  p.seed = seed;
  return build_index(store_out, p);
}

}  // namespace

TEST_CASE("pool insertion idiom") {
  std::vector<Neighbor> pool(8);
  unsigned size = 0;
  pool[size++] = Neighbor(10, 5.f, true);

  // better candidate goes to the front
  CHECK(insert_into_pool(pool.data(), size, Neighbor(11, 3.f, true)) == 0);
  ++size;
  CHECK(pool[0].id == 11);
  CHECK(pool[1].id == 10);

  // worse-than-everything appends at `size`
  CHECK(insert_into_pool(pool.data(), size, Neighbor(12, 9.f, true)) == 2);
  ++size;

  // middle insertion shifts the tail
  CHECK(insert_into_pool(pool.data(), size, Neighbor(13, 4.f, true)) == 1);
  ++size;
  CHECK(pool[0].id == 11);
  CHECK(pool[1].id == 13);
  CHECK(pool[2].id == 10);
  CHECK(pool[3].id == 12);

  // duplicate id in an equal-key run reports size+1 and leaves the pool alone
  CHECK(insert_into_pool(pool.data(), size, Neighbor(13, 4.f, true)) == size + 1);
  CHECK(pool[1].id == 13);
  CHECK(size == 4);

  // equal keys order by id
  CHECK(insert_into_pool(pool.data(), size, Neighbor(9, 4.f, true)) == 1);
  ++size;
  CHECK(pool[1].id == 9);
  CHECK(pool[2].id == 13);
}

TEST_CASE("three-node chain is expanded in pool order") {
  // scores along the chain rise, so the walk visits 0, 1, 2 and returns 2
  VectorStore s = make_store(1, {{1}, {2}, {3}});
  ProximityGraph g;
  g.adj = {{1}, {2}, {}};
  PspIndex idx = wrap_index(s, g, {0});

  SearchParams sp;
  sp.ls = 3;
  sp.k = 1;
  sp.metric = Metric::ip;
  SearchScratch scratch;
  float q = 1.f;
  SearchTrace t = greedy_search(idx, s, &q, sp, scratch);

  CHECK(t.visited == std::vector<uint32_t>{0, 1, 2});
  CHECK(t.hops == 3);
  CHECK(t.dc == 3);
  REQUIRE(t.result.size() == 1);
  CHECK(t.result[0].first == 2);
  CHECK(t.result[0].second == doctest::Approx(3.0));
  CHECK(t.wall_ns > 0);
  CHECK(!t.early_terminated);
}

TEST_CASE("l2 search returns the queried point itself") {
  VectorStore store;
  PspIndex idx = build_gaussian_index(store, 1000, 7);
  SearchParams sp;
  sp.ls = 50;
  sp.k = 1;
  sp.metric = Metric::l2;
  SearchScratch scratch;
  for (uint32_t probe : {3u, 500u, 999u}) {
    SearchTrace t = greedy_search(idx, store, store.row(probe), sp, scratch);
    REQUIRE(!t.result.empty());
    CHECK(t.result[0].first == probe);
    CHECK(t.result[0].second == 0.0);  // -distance
  }
}

TEST_CASE("select_entries ranks clusters by query-centroid similarity") {
  VectorStore s = make_store(2, {{1, 0}, {1, 0.1f}, {1, -0.1f}, {-1, 0}, {-1, 0.1f}});
  NavIvf nav;
  nav.dim = 2;
  nav.centroids = {1.f, 0.f, -1.f, 0.f};
  nav.lists = {{0, 1, 2}, {3, 4}};

  float qpos[2] = {1.f, 0.f};
  auto take_all = select_entries(nav, qpos, 2, 5, 1);
  REQUIRE(take_all.size() == 5);
  std::set<uint32_t> first3(take_all.begin(), take_all.begin() + 3);
  CHECK(first3 == std::set<uint32_t>{0, 1, 2});  // best cluster exhausted first
  std::set<uint32_t> last2(take_all.begin() + 3, take_all.end());
  CHECK(last2 == std::set<uint32_t>{3, 4});

  auto take2 = select_entries(nav, qpos, 2, 2, 1);
  REQUIRE(take2.size() == 2);
  for (uint32_t id : take2) CHECK(id <= 2);

  float qneg[2] = {-1.f, 0.f};
  auto neg2 = select_entries(nav, qneg, 2, 2, 1);
  for (uint32_t id : neg2) CHECK(id >= 3);

  CHECK(select_entries(nav, qpos, 2, 4, 9) == select_entries(nav, qpos, 2, 4, 9));
}

TEST_CASE("search matches brute force on easy data") {
  VectorStore store;
  PspIndex idx = build_gaussian_index(store);
  SynthSpec qs;
  qs.kind = SynthKind::gaussian;
  qs.n = 50;
  qs.d = 8;
  qs.seed = 99;
  QuerySet queries = synth_generate(qs);
  GroundTruth gt = brute_topk_all(store, queries, 10, Metric::ip);

  SearchScratch scratch;
  auto mean_recall = [&](uint32_t ls) {
    SearchParams sp;
    sp.ls = ls;
    sp.k = 10;
    double acc = 0;
    for (size_t qi = 0; qi < queries.count(); ++qi) {
      sp.seed = 1 ^ splitmix64(qi);
      SearchTrace t = greedy_search(idx, store, queries.row(qi), sp, scratch);
      std::vector<int32_t> got;
      for (auto& [id, score] : t.result) got.push_back(static_cast<int32_t>(id));
      acc += recall_at_k(got, gt.row(qi));
    }
    return acc / double(queries.count());
  };

  double r20 = mean_recall(20), r80 = mean_recall(80), r200 = mean_recall(200);
  CHECK(r200 >= 0.95);
  CHECK(r200 >= r20 - 0.005);  // recall effectively non-decreasing in ls
  CHECK(r80 >= r20 - 0.005);
}

TEST_CASE("trace accounting: dc shadow counter and visited order") {
  VectorStore store;
  PspIndex idx = build_gaussian_index(store, 1500, 3);
  SynthSpec qs;
  qs.kind = SynthKind::gaussian;
  qs.n = 10;
  qs.d = 8;
  qs.seed = 123;
  QuerySet queries = synth_generate(qs);

  SearchParams sp;
  sp.ls = 60;
  sp.k = 10;
  SearchScratch scratch;
  for (size_t qi = 0; qi < queries.count(); ++qi) {
    DcCounter shadow;
    SearchTrace t = greedy_search(idx, store, queries.row(qi), sp, scratch, nullptr, nullptr, 0,
                                  &shadow);
    CHECK(shadow.n == t.dc);
    CHECK(t.visited.size() == t.hops);
    CHECK(t.dc >= t.hops);
    std::set<uint32_t> uniq(t.visited.begin(), t.visited.end());
    CHECK(uniq.size() == t.visited.size());  // a node is expanded at most once
    REQUIRE(t.result.size() == 10);
    for (size_t r = 1; r < t.result.size(); ++r)
      CHECK(t.result[r - 1].second >= t.result[r].second);
  }
}

TEST_CASE("logged features replay exactly offline") {
  VectorStore store;
  PspIndex idx = build_gaussian_index(store, 1200, 11);
  SynthSpec qs;
  qs.kind = SynthKind::gaussian;
  qs.n = 5;
  qs.d = 8;
  qs.seed = 321;
  QuerySet queries = synth_generate(qs);
  GroundTruth gt = brute_topk_all(store, queries, 10, Metric::ip);

  SearchParams sp;
  sp.ls = 80;
  sp.k = 10;
  SearchScratch scratch;
  for (size_t qi = 0; qi < queries.count(); ++qi) {
    std::vector<PopRecord> log;
    greedy_search(idx, store, queries.row(qi), sp, scratch, &log, gt.row(qi).data(), gt.k);
    REQUIRE(!log.empty());
    FeatureState st;
    uint32_t max_hits = 0;
    for (const PopRecord& r : log) {
      update_features(st, r.ip, r.norm, r.topk_changed);
      for (int j = 0; j < 4; ++j) CHECK(st.f[j] == doctest::Approx(r.features[j]).epsilon(1e-12));
      CHECK(r.topk_hits <= gt.k);
      max_hits = std::max(max_hits, r.topk_hits);
    }
    CHECK(max_hits > 0);  // the trace does find truth entries
  }
}

TEST_CASE("aet guards: missing model and wrong metric") {
  VectorStore store;
  PspIndex idx = build_gaussian_index(store, 600, 13);
  SearchParams sp;
  sp.ls = 20;
  sp.k = 5;
  sp.use_aet = true;
  SearchScratch scratch;
  CHECK_THROWS_AS(greedy_search(idx, store, store.row(0), sp, scratch), DataError);

  // attach a permissive model, then reject non-ip metrics
  AetModel m;
  m.nodes.resize(1);
  m.nodes[0] = {0, 0.f, 0, 0, 1, 0};  // single leaf: never stop at theta 2
  m.theta = 2.0f;
  m.compile_rules();
  idx.aet = m;
  sp.metric = Metric::l2;
  CHECK_THROWS_AS(greedy_search(idx, store, store.row(0), sp, scratch), DataError);

  sp.metric = Metric::ip;
  SearchTrace t = greedy_search(idx, store, store.row(0), sp, scratch);
  CHECK(!t.early_terminated);  // model never votes stop

  // an always-stop model terminates after the first expansion
  AetModel stopper;
  stopper.nodes.resize(1);
  stopper.nodes[0] = {0, 0.f, 0, 0, 0, 1};  // pos=0: stop for finite theta
  stopper.theta = 2.0f;
  stopper.compile_rules();
  idx.aet = stopper;
  SearchTrace t2 = greedy_search(idx, store, store.row(0), sp, scratch);
  CHECK(t2.early_terminated);
  CHECK(t2.hops == 1);

  // theta override = inf disables stopping without touching the model
  sp.theta_override = std::numeric_limits<float>::infinity();
  SearchTrace t3 = greedy_search(idx, store, store.row(0), sp, scratch);
  CHECK(!t3.early_terminated);
}

TEST_CASE("dual walks coincide on the unit sphere") {
  SynthSpec spec;
  spec.kind = SynthKind::sphere;
  spec.n = 400;
  spec.d = 6;
  spec.seed = 17;
  VectorStore s = synth_generate(spec);
  ProximityGraph g = ideal_prune(s, 60.0);

  spec.n = 20;
  spec.seed = 18;
  QuerySet queries = synth_generate(spec);
  for (size_t qi = 0; qi < queries.count(); ++qi) {
    uint32_t entry = static_cast<uint32_t>((qi * 37) % s.count());
    WalkPaths w = dual_metric_walk(g, s, queries.row(qi), s.dim, 1.0, entry, 15);
    // on unit norms, IP ascent and L2 descent choose identical successors
    CHECK(w.path_ip == w.path_l2);
    CHECK(w.path_ip.size() <= 15);
    REQUIRE(!w.path_ip.empty());
    CHECK(w.path_ip[0] == entry);
  }
}

TEST_CASE("walk respects the step cap and strict improvement") {
  VectorStore s = make_store(1, {{1}, {2}, {3}, {4}, {5}});
  ProximityGraph g;
  g.adj = {{1}, {2}, {3}, {4}, {}};
  float q = 1.f;
  WalkPaths w = dual_metric_walk(g, s, &q, 1, 1.0, 0, 3);
  CHECK(w.path_ip == std::vector<uint32_t>{0, 1, 2});  // capped at 3 nodes
  WalkPaths full = dual_metric_walk(g, s, &q, 1, 1.0, 0, 15);
  CHECK(full.path_ip == std::vector<uint32_t>{0, 1, 2, 3, 4});  // stops at the sink
}
