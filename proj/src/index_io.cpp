#include "psp/index_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

namespace psp {

namespace {

constexpr char kMagic[4] = {'P', 'S', 'P', '1'};
constexpr uint16_t kVersion = 1;

uint32_t fourcc(const char* s) {
  uint32_t v;
  std::memcpy(&v, s, 4);
  return v;
}

uint32_t crc_of(const std::string& payload) {
  return static_cast<uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));
}

template <typename T>
void put(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_bytes(std::string& out, const void* p, size_t len) {
  out.append(static_cast<const char*>(p), len);
}

void append_section(std::string& out, const char* tag, const std::string& payload) {
  put(out, fourcc(tag));
  put(out, static_cast<uint64_t>(payload.size()));
  out += payload;
  put(out, crc_of(payload));
}

// bounds-checked cursor over the loaded file
struct Reader {
  const char* p;
  size_t len;
  size_t at = 0;

  size_t remaining() const { return len - at; }
  void need(size_t bytes) const {
    if (bytes > remaining())
      throw DataError("MalformedRecord: index file truncated");
  }
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, p + at, sizeof(T));
    at += sizeof(T);
    return v;
  }
  const char* take(size_t bytes) {
    need(bytes);
    const char* q = p + at;
    at += bytes;
    return q;
  }
};

template <typename T>
std::vector<T> read_array(Reader& r, size_t count) {
  // `need` ran against the section length before this, so the multiply is safe
  std::vector<T> out(count);
  std::memcpy(out.data(), r.take(count * sizeof(T)), count * sizeof(T));
  return out;
}

}  // namespace

void save_index(const PspIndex& index, const std::string& path) {
  const size_t n = index.n();
  std::string out;
  out.append(kMagic, 4);
  put(out, kVersion);

  {
    std::string hdr;
    put(hdr, static_cast<uint64_t>(n));
    put(hdr, index.dim);
    put(hdr, index.R);
    put(hdr, index.S);
    put(hdr, index.clusters);
    put(hdr, index.nav_total);
    put(hdr, index.alpha_millideg);
    append_section(out, "HDR ", hdr);
  }
  {
    std::string csr;
    int64_t off = 0;
    put(csr, off);
    for (size_t i = 0; i < n; ++i) {
      off += static_cast<int64_t>(index.graph.adj[i].size());
      put(csr, off);
    }
    for (size_t i = 0; i < n; ++i)
      for (uint32_t v : index.graph.adj[i]) put(csr, static_cast<int32_t>(v));
    append_section(out, "CSR ", csr);
  }
  {
    std::string nav;
    const uint32_t c = index.nav.c();
    put(nav, c);
    put(nav, index.nav.dim);
    put_bytes(nav, index.nav.centroids.data(), index.nav.centroids.size() * sizeof(float));
    int64_t off = 0;
    put(nav, off);
    for (uint32_t i = 0; i < c; ++i) {
      off += static_cast<int64_t>(index.nav.lists[i].size());
      put(nav, off);
    }
    for (uint32_t i = 0; i < c; ++i)
      for (uint32_t v : index.nav.lists[i]) put(nav, static_cast<int32_t>(v));
    append_section(out, "NAV ", nav);
  }
  if (index.aet) {
    auto bytes = serialize_aet(*index.aet);
    std::string aet(bytes.data(), bytes.size());
    append_section(out, "AET ", aet);
  }
  atomic_write_file(path, out.data(), out.size());
}

PspIndex load_index(const std::string& path, std::vector<SectionInfo>* sections) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("FileError: cannot open '" + path + "'");
  std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  Reader r{file.data(), file.size()};
  if (file.size() < 6 || std::memcmp(r.take(4), kMagic, 4) != 0)
    throw DataError("BadMagic: not an index file");
  uint16_t ver = r.get<uint16_t>();
  if (ver != kVersion)
    throw DataError("VersionUnsupported: index version " + std::to_string(ver));

  PspIndex index;
  uint64_t n = 0;
  bool have_hdr = false, have_csr = false, have_nav = false;
  if (sections) sections->clear();

  while (r.remaining() > 0) {
    uint32_t tag = r.get<uint32_t>();
    uint64_t len = r.get<uint64_t>();
    if (len > r.remaining())
      throw DataError("MalformedRecord: section length exceeds file size");
    const char* payload = r.take(len);
    uint32_t stored_crc = r.get<uint32_t>();
    uint32_t actual = static_cast<uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(payload), static_cast<uInt>(len)));
    char tag_str[5] = {0};
    std::memcpy(tag_str, &tag, 4);
    if (actual != stored_crc)
      throw DataError(std::string("ChecksumMismatch: section '") + tag_str + "'");
    if (sections) sections->push_back({tag_str, len});

    Reader s{payload, len};
    if (tag == fourcc("HDR ")) {
      if (len != 8 + 6 * 4) throw DataError("MalformedRecord: header section size");
      n = s.get<uint64_t>();
      index.dim = s.get<uint32_t>();
      index.R = s.get<uint32_t>();
      index.S = s.get<uint32_t>();
      index.clusters = s.get<uint32_t>();
      index.nav_total = s.get<uint32_t>();
      index.alpha_millideg = s.get<uint32_t>();
      if (n == 0 || index.dim == 0) throw DataError("MalformedRecord: empty index header");
      if (n > (uint64_t{1} << 33) || index.dim > (1u << 20))
        throw DataError("MalformedRecord: implausible index header");
      have_hdr = true;
    } else if (tag == fourcc("CSR ")) {
      if (!have_hdr) throw DataError("MalformedRecord: adjacency before header");
      if (len < (n + 1) * 8) throw DataError("MalformedRecord: adjacency offsets truncated");
      auto offsets = read_array<int64_t>(s, n + 1);
      if (offsets[0] != 0) throw DataError("MalformedRecord: adjacency offset origin");
      for (size_t i = 0; i < n; ++i)
        if (offsets[i + 1] < offsets[i])
          throw DataError("MalformedRecord: adjacency offsets not monotone");
      uint64_t total = static_cast<uint64_t>(offsets[n]);
      if (total > len / 4 || s.remaining() != total * 4)
        throw DataError("MalformedRecord: adjacency id block size");
      auto ids = read_array<int32_t>(s, total);
      const uint32_t cap = index.R + index.S;
      index.graph.adj.assign(n, {});
      for (size_t i = 0; i < n; ++i) {
        uint64_t deg = static_cast<uint64_t>(offsets[i + 1] - offsets[i]);
        if (deg > cap) throw DataError("MalformedRecord: node degree exceeds cap");
        auto& row = index.graph.adj[i];
        row.reserve(deg);
        for (uint64_t j = static_cast<uint64_t>(offsets[i]); j < static_cast<uint64_t>(offsets[i + 1]); ++j) {
          int32_t v = ids[j];
          if (v < 0 || static_cast<uint64_t>(v) >= n)
            throw DataError("MalformedRecord: adjacency id out of range");
          row.push_back(static_cast<uint32_t>(v));
        }
      }
      have_csr = true;
    } else if (tag == fourcc("NAV ")) {
      if (!have_hdr) throw DataError("MalformedRecord: navigation before header");
      uint32_t c = s.get<uint32_t>();
      uint32_t d = s.get<uint32_t>();
      if (c != index.clusters || d != index.dim)
        throw DataError("MalformedRecord: navigation header disagrees with index header");
      if (c == 0 || s.remaining() < static_cast<uint64_t>(c) * d * 4 + (c + 1) * 8)
        throw DataError("MalformedRecord: navigation section truncated");
      index.nav.dim = d;
      index.nav.centroids = read_array<float>(s, static_cast<size_t>(c) * d);
      auto offsets = read_array<int64_t>(s, c + 1);
      if (offsets[0] != 0) throw DataError("MalformedRecord: navigation offset origin");
      for (uint32_t i = 0; i < c; ++i)
        if (offsets[i + 1] < offsets[i])
          throw DataError("MalformedRecord: navigation offsets not monotone");
      uint64_t total = static_cast<uint64_t>(offsets[c]);
      if (total > len / 4 || s.remaining() != total * 4)
        throw DataError("MalformedRecord: navigation id block size");
      auto ids = read_array<int32_t>(s, total);
      index.nav.lists.assign(c, {});
      for (uint32_t i = 0; i < c; ++i) {
        auto& list = index.nav.lists[i];
        for (int64_t j = offsets[i]; j < offsets[i + 1]; ++j) {
          int32_t v = ids[j];
          if (v < 0 || static_cast<uint64_t>(v) >= n)
            throw DataError("MalformedRecord: navigation id out of range");
          list.push_back(static_cast<uint32_t>(v));
        }
      }
      have_nav = true;
    } else if (tag == fourcc("AET ")) {
      index.aet = deserialize_aet(payload, len);
    } else {
      throw DataError(std::string("MalformedRecord: unknown section '") + tag_str + "'");
    }
  }
  if (!have_hdr || !have_csr || !have_nav)
    throw DataError("MalformedRecord: index file missing required sections");
  return index;
}

}  // namespace psp
