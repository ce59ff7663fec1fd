#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "psp/vecstore.hpp"

using namespace psp;

namespace {

std::string tmp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const void* bytes, size_t len) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(static_cast<const char*>(bytes), static_cast<std::streamsize>(len));
}

}  // namespace

TEST_CASE("fvecs hand-built record roundtrip") {
  // two records, d=3, written byte by byte
  std::vector<char> bytes;
  auto put_i32 = [&](int32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    bytes.insert(bytes.end(), b, b + 4);
  };
  auto put_f32 = [&](float v) {
    char b[4];
    std::memcpy(b, &v, 4);
    bytes.insert(bytes.end(), b, b + 4);
  };
  put_i32(3);
  put_f32(1.5f);
  put_f32(-2.0f);
  put_f32(0.25f);
  put_i32(3);
  put_f32(4.0f);
  put_f32(5.0f);
  put_f32(6.0f);

  std::string path = tmp_path("hand.fvecs");
  spit(path, bytes.data(), bytes.size());
  VectorStore s = load_fvecs(path);
  CHECK(s.dim == 3);
  CHECK(s.count() == 2);
  CHECK(s.row(0)[0] == 1.5f);
  CHECK(s.row(0)[1] == -2.0f);
  CHECK(s.row(0)[2] == 0.25f);
  CHECK(s.row(1)[2] == 6.0f);
  CHECK(s.norms[1] == doctest::Approx(std::sqrt(16.0 + 25.0 + 36.0)));

  // save must reproduce the exact bytes
  std::string path2 = tmp_path("hand2.fvecs");
  save_fvecs(s, path2);
  CHECK(slurp(path2) == bytes);
}

TEST_CASE("fvecs malformed inputs rejected") {
  std::string path = tmp_path("bad.fvecs");

  // truncated payload
  int32_t d = 4;
  float v = 1.0f;
  std::vector<char> bytes(4 + 4);
  std::memcpy(bytes.data(), &d, 4);
  std::memcpy(bytes.data() + 4, &v, 4);
  spit(path, bytes.data(), bytes.size());
  CHECK_THROWS_AS(load_fvecs(path), DataError);

  // inconsistent dims between records
  std::vector<char> mixed;
  auto put = [&](const void* p) {
    const char* c = static_cast<const char*>(p);
    mixed.insert(mixed.end(), c, c + 4);
  };
  int32_t d1 = 1, d2 = 2;
  float f = 0.f;
  put(&d1);
  put(&f);
  put(&d2);
  put(&f);
  put(&f);
  spit(path, mixed.data(), mixed.size());
  CHECK_THROWS_AS(load_fvecs(path), DataError);

  // non-finite value
  std::vector<char> inf_bytes;
  float bad = std::numeric_limits<float>::infinity();
  put(&d1);  // appends to mixed; rebuild cleanly
  inf_bytes.clear();
  auto put2 = [&](const void* p) {
    const char* c = static_cast<const char*>(p);
    inf_bytes.insert(inf_bytes.end(), c, c + 4);
  };
  put2(&d1);
  put2(&bad);
  spit(path, inf_bytes.data(), inf_bytes.size());
  CHECK_THROWS_AS(load_fvecs(path), DataError);

  CHECK_THROWS_AS(load_fvecs(tmp_path("nonexistent.fvecs")), DataError);
}

TEST_CASE("bvecs widen to float") {
  std::vector<char> bytes;
  int32_t d = 4;
  bytes.resize(4 + 4);
  std::memcpy(bytes.data(), &d, 4);
  unsigned char raw[4] = {0, 1, 128, 255};
  std::memcpy(bytes.data() + 4, raw, 4);
  std::string path = tmp_path("hand.bvecs");
  spit(path, bytes.data(), bytes.size());
  VectorStore s = load_bvecs(path);
  CHECK(s.dim == 4);
  CHECK(s.count() == 1);
  CHECK(s.row(0)[0] == 0.f);
  CHECK(s.row(0)[1] == 1.f);
  CHECK(s.row(0)[2] == 128.f);
  CHECK(s.row(0)[3] == 255.f);
}

TEST_CASE("ivecs roundtrip") {
  std::vector<std::vector<int32_t>> rows = {{5, 3, 9}, {1, 2, 4}};
  std::string path = tmp_path("hand.ivecs");
  save_ivecs(rows, path);
  CHECK(load_ivecs(path) == rows);
}

TEST_CASE("kernel hand values") {
  float a[3] = {1, 2, 3}, b[3] = {4, 5, 6};
  CHECK(inner_product(a, b, 3) == 32.0);
  CHECK(l2_sqr(a, b, 3) == 27.0);
  CHECK(l2_distance(a, b, 3) == doctest::Approx(std::sqrt(27.0)));
  double na = std::sqrt(14.0), nb = std::sqrt(77.0);
  CHECK(cosine_sim(a, b, 3, na, nb) == doctest::Approx(32.0 / (na * nb)));
  CHECK(cosine_sim(a, b, 3, 0.0, nb) == 0.0);  // zero-norm convention

  CHECK(metric_score(Metric::ip, a, b, 3, na, nb) == 32.0);
  CHECK(metric_score(Metric::l2, a, b, 3, na, nb) == doctest::Approx(-std::sqrt(27.0)));
  CHECK(metric_score(Metric::cosine, a, b, 3, na, nb) == doctest::Approx(32.0 / (na * nb)));
}

TEST_CASE("kernels accumulate in double") {
  // 1e8 + 1 - 1e8 survives only with a float64 accumulator
  float a[3] = {1e8f, 1.f, -1e8f}, ones[3] = {1.f, 1.f, 1.f};
  CHECK(inner_product(a, ones, 3) == 1.0);
}

TEST_CASE("finalize validates and caches norms") {
  VectorStore s;
  s.dim = 2;
  s.data = {3.f, 4.f, 0.f, 0.f};
  s.finalize();
  CHECK(s.norms.size() == 2);
  CHECK(s.norms[0] == doctest::Approx(5.0));
  CHECK(s.norms[1] == 0.f);

  VectorStore bad;
  bad.dim = 1;
  bad.data = {std::numeric_limits<float>::quiet_NaN()};
  CHECK_THROWS_AS(bad.finalize(), DataError);
}

TEST_CASE("atomic_write_file writes and replaces") {
  std::string path = tmp_path("atomic.bin");
  atomic_write_file(path, "hello", 5);
  CHECK(slurp(path) == std::vector<char>{'h', 'e', 'l', 'l', 'o'});
  atomic_write_file(path, "xy", 2);
  CHECK(slurp(path) == std::vector<char>{'x', 'y'});
}

TEST_CASE("dc counter") {
  DcCounter c;
  c.bump();
  c.bump();
  CHECK(c.n == 2);
  c.reset();
  CHECK(c.n == 0);
}
