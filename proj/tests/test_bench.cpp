#include <algorithm>

#include "doctest.h"
#include "psp/evalbench.hpp"
#include "psp/synth.hpp"

using namespace psp;

namespace {

struct Fixture {
  VectorStore store;
  QuerySet queries;
  GroundTruth truth;
  PspIndex index;

  explicit Fixture(size_t n = 1500, uint32_t k = 10, SynthKind kind = SynthKind::gaussian) {
    SynthSpec spec;
    spec.kind = kind;
    spec.n = n;
    spec.d = 8;
    spec.seed = 5;
    store = synth_generate(spec);
    spec.n = 40;
    spec.seed = 6;
    queries = synth_generate(spec);
    truth = brute_topk_all(store, queries, k, Metric::ip);

    BuildParams p;
    p.K = 20;
    p.L = 40;
    p.R = 12;
    p.S = 3;
    p.clusters = 8;
    p.nav_total = 64;
    p.seed = 5;
    index = build_index(store, p);
  }
};

AetModel never_stop_model() {
  AetModel m;
  m.nodes.resize(1);
  m.nodes[0] = {0, 0.f, 0, 0, 1, 0};
  m.theta = 2.0f;
  m.compile_rules();
  return m;
}

const float kNanTheta = std::numeric_limits<float>::quiet_NaN();

}  // namespace

TEST_CASE("bench point agrees with a manual replay") {
  Fixture fx;
  BenchRow row = bench_point(fx.index, fx.store, fx.queries, fx.truth, 10, 100, Metric::ip,
                             SearchParams::Entry::sn, false, kNanTheta, 11);

  SearchParams sp;
  sp.ls = 100;
  sp.k = 10;
  SearchScratch scratch;
  double recall = 0, dc = 0;
  for (size_t qi = 0; qi < fx.queries.count(); ++qi) {
    sp.seed = 11 ^ splitmix64(qi);
    SearchTrace t = greedy_search(fx.index, fx.store, fx.queries.row(qi), sp, scratch);
    std::vector<int32_t> got;
    for (auto& [id, s] : t.result) got.push_back(static_cast<int32_t>(id));
    recall += recall_at_k(got, fx.truth.row(qi));
    dc += double(t.dc);
  }
  recall /= double(fx.queries.count());
  dc /= double(fx.queries.count());

  CHECK(row.recall_mean == doctest::Approx(recall));
  CHECK(row.mean_dc == doctest::Approx(dc));
  CHECK(row.mean_hops > 0);
  CHECK(row.p50_ns > 0);
  CHECK(row.p99_ns >= row.p50_ns);

  // throughput and mean latency describe the same loop
  double product = row.qps * row.mean_wall_ns * 1e-9;
  CHECK(product > 0.8);
  CHECK(product < 1.2);
}

TEST_CASE("bench point is deterministic in everything but time") {
  Fixture fx;
  BenchRow a = bench_point(fx.index, fx.store, fx.queries, fx.truth, 10, 80, Metric::ip,
                           SearchParams::Entry::sn, false, kNanTheta, 3);
  BenchRow b = bench_point(fx.index, fx.store, fx.queries, fx.truth, 10, 80, Metric::ip,
                           SearchParams::Entry::sn, false, kNanTheta, 3);
  CHECK(a.recall_mean == b.recall_mean);
  CHECK(a.mean_dc == b.mean_dc);
  CHECK(a.median_dc == b.median_dc);
  CHECK(a.mean_hops == b.mean_hops);
}

TEST_CASE("truth size mismatch is rejected") {
  Fixture fx;
  GroundTruth short_truth = fx.truth;
  short_truth.count -= 1;
  short_truth.ids.resize(short_truth.count * short_truth.k);
  CHECK_THROWS_AS(bench_point(fx.index, fx.store, fx.queries, short_truth, 10, 50, Metric::ip,
                              SearchParams::Entry::sn, false, kNanTheta, 1),
                  DataError);
}

TEST_CASE("sweep emits ordered rows and an inert model changes nothing") {
  Fixture fx;
  fx.index.aet = never_stop_model();
  BenchReport rep = run_sweep(fx.index, fx.store, fx.queries, fx.truth, 10, {120, 40, 80}, 2,
                              Metric::ip, SearchParams::Entry::sn, 1);
  REQUIRE(rep.rows.size() == 6);  // both mode: off+on per ls, ls ascending
  CHECK(rep.rows[0].ls == 40);
  CHECK(rep.rows[2].ls == 80);
  CHECK(rep.rows[4].ls == 120);
  for (size_t i = 0; i < 6; i += 2) {
    CHECK(!rep.rows[i].aet);
    CHECK(rep.rows[i + 1].aet);
    // a never-stop model must not perturb recall or work
    CHECK(rep.rows[i].recall_mean == rep.rows[i + 1].recall_mean);
    CHECK(rep.rows[i].mean_dc == rep.rows[i + 1].mean_dc);
  }
}

TEST_CASE("brute force reference row") {
  Fixture fx;
  BenchRow row = brute_force_row(fx.store, fx.queries, fx.truth, 10, Metric::ip);
  CHECK(row.recall_mean == 1.0);
  CHECK(row.mean_dc == double(fx.store.count()));
  CHECK(row.median_dc == double(fx.store.count()));
}

TEST_CASE("operating point finds the smallest sufficient pool") {
  Fixture fx;
  std::vector<uint32_t> grid = {20, 60, 150, 400};
  OperatingPoint op = operating_point(fx.index, fx.store, fx.queries, fx.truth, 10, grid, 0.9,
                                      Metric::ip, SearchParams::Entry::sn, false, kNanTheta, 1);
  CHECK(op.met);
  CHECK(op.row.recall_mean >= 0.9);
  // every smaller grid entry must miss the target
  for (uint32_t ls : grid) {
    if (ls >= op.row.ls) break;
    BenchRow r = bench_point(fx.index, fx.store, fx.queries, fx.truth, 10, ls, Metric::ip,
                             SearchParams::Entry::sn, false, kNanTheta, 1);
    CHECK(r.recall_mean < 0.9);
  }

  OperatingPoint impossible =
      operating_point(fx.index, fx.store, fx.queries, fx.truth, 10, grid, 1.5, Metric::ip,
                      SearchParams::Entry::sn, false, kNanTheta, 1);
  CHECK(!impossible.met);
  CHECK(impossible.row.ls == 400);
}

TEST_CASE("ablation matrix produces the five labeled variants") {
  SynthSpec spec;
  spec.kind = SynthKind::lognormal;
  spec.n = 1200;
  spec.d = 8;
  spec.seed = 9;
  VectorStore store = synth_generate(spec);
  spec.n = 30;
  spec.seed = 10;
  QuerySet queries = synth_generate(spec);

  BuildParams bp;
  bp.K = 20;
  bp.L = 40;
  bp.R = 10;
  bp.S = 3;
  bp.clusters = 4;
  bp.nav_total = 48;
  bp.seed = 3;

  AetTrainParams tp;
  tp.k = 10;
  tp.ls = 200;
  tp.seed = 3;
  tp.build = bp;

  AblationReport rep =
      ablation_matrix(store, queries, 10, bp, tp, {40, 100, 250, 500}, 0.95, 3);
  REQUIRE(rep.rows.size() == 5);
  CHECK(rep.rows[0].variant == "base");
  CHECK(rep.rows[1].variant == "+ef");
  CHECK(rep.rows[2].variant == "+sn");
  CHECK(rep.rows[3].variant == "+aet");
  CHECK(rep.rows[4].variant == "full");
  CHECK(rep.target_recall == 0.95);
  for (const auto& row : rep.rows) {
    CHECK(row.at.row.mean_dc > 0);
    CHECK(row.at.row.recall_mean >= 0.0);
    CHECK(row.at.row.recall_mean <= 1.0);
    if (row.at.met) CHECK(row.at.row.recall_mean >= 0.95);
  }
}
