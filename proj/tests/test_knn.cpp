#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "psp/knn_graph.hpp"
#include "psp/synth.hpp"

using namespace psp;

namespace {

VectorStore line_points(std::initializer_list<float> xs) {
  VectorStore s;
  s.dim = 1;
  s.data.assign(xs.begin(), xs.end());
  s.finalize();
  return s;
}

}  // namespace

TEST_CASE("exact knn on a hand-checked line") {
  VectorStore s = line_points({0, 1, 3, 7});
  KnnGraph g = build_exact_knn(s, 2);
  REQUIRE(g.K == 2);
  REQUIRE(g.n == 4);
  CHECK(g.row(0)[0] == 1);  // d=1
  CHECK(g.row(0)[1] == 2);  // d=3
  CHECK(g.row(1)[0] == 0);
  CHECK(g.row(1)[1] == 2);
  CHECK(g.row(2)[0] == 1);  // d=2
  CHECK(g.row(2)[1] == 0);  // d=3
  CHECK(g.row(3)[0] == 2);  // d=4
  CHECK(g.row(3)[1] == 1);
  CHECK(g.row_dists(0)[0] == doctest::Approx(1.0));
  CHECK(g.row_dists(0)[1] == doctest::Approx(3.0));
  // rows ascending by distance
  for (size_t i = 0; i < 4; ++i) CHECK(g.row_dists(i)[0] <= g.row_dists(i)[1]);
}

TEST_CASE("exact knn breaks distance ties toward the smaller id") {
  VectorStore s = line_points({0, 1, 2});
  KnnGraph g = build_exact_knn(s, 2);
  CHECK(g.row(1)[0] == 0);  // d(1,0) == d(1,2) == 1
  CHECK(g.row(1)[1] == 2);
}

TEST_CASE("exact knn rejects K beyond n-1") {
  VectorStore s = line_points({0, 1, 2});
  CHECK_THROWS_AS(build_exact_knn(s, 10), DataError);
  CHECK(build_exact_knn(s, 2).K == 2);
}

TEST_CASE("nn-descent approximates the exact graph deterministically") {
  SynthSpec spec;
  spec.kind = SynthKind::gaussian;
  spec.n = 2000;
  spec.d = 8;
  spec.seed = 31;
  VectorStore s = synth_generate(spec);

  NnDescentParams nd;
  nd.seed = 5;
  NnDescentResult r1 = build_nndescent_knn(s, 10, nd);
  CHECK(r1.acc_at_k >= 0.9);

  // independent accuracy check over every row, not just the sampled estimate
  KnnGraph exact = build_exact_knn(s, 10);
  size_t hit = 0, total = 0;
  for (size_t i = 0; i < s.count(); ++i) {
    auto er = exact.row(i);
    auto ar = r1.graph.row(i);
    for (uint32_t e : er) {
      ++total;
      for (uint32_t a : ar)
        if (a == e) {
          ++hit;
          break;
        }
    }
  }
  CHECK(double(hit) / double(total) >= 0.9);

  NnDescentResult r2 = build_nndescent_knn(s, 10, nd);
  CHECK(r1.graph.ids == r2.graph.ids);
  CHECK(r1.iters_run == r2.iters_run);
}

TEST_CASE("knn cache roundtrip and corruption") {
  VectorStore s = line_points({0, 2, 5, 6});
  KnnGraph g = build_exact_knn(s, 2);
  std::string path = (std::filesystem::temp_directory_path() / "knn.cache").string();
  save_knn_cache(g, path);
  KnnGraph back = load_knn_cache(path);
  CHECK(back.K == g.K);
  CHECK(back.n == g.n);
  CHECK(back.ids == g.ids);
  CHECK(back.dists == g.dists);

  // stomp the magic
  {
    std::ofstream out(path, std::ios::binary | std::ios::in);
    out.write("XXXX", 4);
  }
  CHECK_THROWS_AS(load_knn_cache(path), DataError);
  CHECK_THROWS_AS(load_knn_cache(path + ".missing"), DataError);
}
