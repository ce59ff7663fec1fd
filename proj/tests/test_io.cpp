#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "psp/index_io.hpp"
#include "psp/rng.hpp"
#include "psp/synth.hpp"

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

void spit(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

PspIndex build_small_index(uint64_t seed = 5) {
  SynthSpec spec;
  spec.kind = SynthKind::gaussian;
  spec.n = 400;
  spec.d = 6;
  spec.seed = seed;
  VectorStore s = synth_generate(spec);
  BuildParams p;
  p.K = 15;
  p.L = 30;
  p.R = 8;
  p.S = 2;
  p.clusters = 4;
  p.nav_total = 32;
  p.seed = seed;
  return build_index(s, p);
}

AetModel hand_model() {
  AetModel m;
  m.nodes.resize(3);
  m.nodes[0] = {3, 0.5f, 1, 2, 0, 0};  // split on f4
  m.nodes[1] = {0, 0.f, 0, 0, 1, 9};   // leaf: stop (9 > 2*1)
  m.nodes[2] = {0, 0.f, 0, 0, 8, 0};   // leaf: continue
  m.theta = 2.0f;
  m.compile_rules();
  return m;
}

}  // namespace

TEST_CASE("index roundtrip preserves everything") {
  PspIndex idx = build_small_index();
  idx.aet = hand_model();

  std::string path = tmp_path("round.idx");
  save_index(idx, path);

  std::vector<SectionInfo> sections;
  PspIndex back = load_index(path, &sections);

  CHECK(back.dim == idx.dim);
  CHECK(back.R == idx.R);
  CHECK(back.S == idx.S);
  CHECK(back.clusters == idx.clusters);
  CHECK(back.alpha_millideg == idx.alpha_millideg);
  REQUIRE(back.n() == idx.n());
  for (size_t i = 0; i < idx.n(); ++i) CHECK(back.graph.adj[i] == idx.graph.adj[i]);
  CHECK(back.nav.dim == idx.nav.dim);
  CHECK(back.nav.centroids == idx.nav.centroids);  // bit-exact floats
  CHECK(back.nav.lists == idx.nav.lists);
  REQUIRE(back.aet.has_value());
  CHECK(back.aet->theta == 2.0f);
  REQUIRE(back.aet->nodes.size() == 3);
  CHECK(back.aet->nodes[0].feature == 3);
  CHECK(back.aet->nodes[1].neg == 9);
  CHECK(!back.aet->rules.empty());  // recompiled on load

  REQUIRE(sections.size() == 4);
  CHECK(sections[0].tag == "HDR ");
  CHECK(sections[1].tag == "CSR ");
  CHECK(sections[2].tag == "NAV ");
  CHECK(sections[3].tag == "AET ");
  CHECK(sections[0].payload_bytes == 32);
}

TEST_CASE("saves are byte-deterministic") {
  PspIndex idx = build_small_index();
  std::string p1 = tmp_path("det1.idx"), p2 = tmp_path("det2.idx");
  save_index(idx, p1);
  save_index(idx, p2);
  CHECK(slurp(p1) == slurp(p2));

  // a fresh identical build serializes to the same bytes too
  PspIndex idx2 = build_small_index();
  std::string p3 = tmp_path("det3.idx");
  save_index(idx2, p3);
  CHECK(slurp(p1) == slurp(p3));
}

TEST_CASE("magic and version are enforced") {
  PspIndex idx = build_small_index();
  std::string path = tmp_path("hdr.idx");
  save_index(idx, path);
  std::vector<char> good = slurp(path);

  std::vector<char> bad = good;
  bad[0] = 'X';
  spit(path, bad);
  CHECK_THROWS_WITH_AS(load_index(path), doctest::Contains("BadMagic"), DataError);

  bad = good;
  bad[4] = 99;  // version u16
  spit(path, bad);
  CHECK_THROWS_WITH_AS(load_index(path), doctest::Contains("VersionUnsupported"), DataError);

  CHECK_THROWS_AS(load_index(tmp_path("missing.idx")), DataError);
}

TEST_CASE("payload corruption trips the section checksum") {
  PspIndex idx = build_small_index();
  std::string path = tmp_path("crc.idx");
  save_index(idx, path);
  std::vector<char> good = slurp(path);

  // corrupt one byte in the middle of the CSR payload
  std::vector<char> bad = good;
  bad[good.size() / 2] ^= 0x40;
  spit(path, bad);
  CHECK_THROWS_WITH_AS(load_index(path), doctest::Contains("ChecksumMismatch"), DataError);
}

TEST_CASE("degree cap from the header is enforced on load") {
  PspIndex idx = build_small_index();
  std::string path = tmp_path("cap.idx");
  save_index(idx, path);
  std::vector<char> bytes = slurp(path);

  // HDR payload starts at 18: u64 n, u32 d, u32 R@+12, u32 S@+16
  const size_t payload = 18;
  uint32_t one = 1, zero = 0;
  std::memcpy(bytes.data() + payload + 12, &one, 4);
  std::memcpy(bytes.data() + payload + 16, &zero, 4);
  uint32_t crc = static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data() + payload), 32));
  std::memcpy(bytes.data() + payload + 32, &crc, 4);
  spit(path, bytes);
  CHECK_THROWS_AS(load_index(path), DataError);
}

TEST_CASE("unknown trailing section is rejected") {
  PspIndex idx = build_small_index();
  std::string path = tmp_path("extra.idx");
  save_index(idx, path);
  std::vector<char> bytes = slurp(path);

  const char tag[4] = {'X', 'T', 'R', 'A'};
  const char payload[4] = {'a', 'b', 'c', 'd'};
  uint64_t len = 4;
  uint32_t crc =
      static_cast<uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(payload), 4));
  bytes.insert(bytes.end(), tag, tag + 4);
  bytes.insert(bytes.end(), reinterpret_cast<char*>(&len), reinterpret_cast<char*>(&len) + 8);
  bytes.insert(bytes.end(), payload, payload + 4);
  bytes.insert(bytes.end(), reinterpret_cast<char*>(&crc), reinterpret_cast<char*>(&crc) + 4);
  spit(path, bytes);
  CHECK_THROWS_AS(load_index(path), DataError);
}

TEST_CASE("corruption fuzz: flips and truncations never crash") {
  PspIndex idx = build_small_index();
  idx.aet = hand_model();
  std::string path = tmp_path("fuzz.idx");
  save_index(idx, path);
  std::vector<char> good = slurp(path);

  CounterRng rng(2024, 0xF022);
  int threw = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<char> bad = good;
    if (trial % 5 == 4) {
      size_t cut = 1 + rng.next_below(static_cast<uint32_t>(good.size() - 1));
      bad.resize(cut);
    } else {
      size_t pos = rng.next_below(static_cast<uint32_t>(good.size()));
      char flip = static_cast<char>(1 + rng.next_below(255));
      bad[pos] = static_cast<char>(bad[pos] ^ flip);
    }
    spit(path, bad);
    try {
      (void)load_index(path);
    } catch (const DataError&) {
      ++threw;
    }
    // any outcome other than success or DataError (e.g. a crash, bad_alloc,
    // or InternalError) fails the test by escaping the harness
  }
  CHECK(threw == 100);  // every single-byte flip lands in CRC-covered bytes
}
