#include "psp/vecstore.hpp"

#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace psp {

void VectorStore::finalize() {
  if (dim == 0) throw DataError("InvalidParam: vector store with dim=0");
  if (data.size() % dim != 0)
    throw DataError("MalformedRecord: data length not a multiple of dim");
  const size_t n = count();
  for (size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i]))
      throw DataError("NonFiniteValue: component " + std::to_string(i % dim) +
                      " of row " + std::to_string(i / dim));
  }
  norms.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const float* p = row(i);
    double acc = 0.0;
    for (uint32_t j = 0; j < dim; ++j) acc += static_cast<double>(p[j]) * p[j];
    norms[i] = static_cast<float>(std::sqrt(acc));
  }
}

double inner_product(const float* a, const float* b, size_t d) {
  double acc = 0.0;
  for (size_t i = 0; i < d; ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

double l2_sqr(const float* a, const float* b, size_t d) {
  double acc = 0.0;
  for (size_t i = 0; i < d; ++i) {
    double diff = static_cast<double>(a[i]) - b[i];
    acc += diff * diff;
  }
  return acc;
}

double l2_distance(const float* a, const float* b, size_t d) { return std::sqrt(l2_sqr(a, b, d)); }

double cosine_sim(const float* a, const float* b, size_t d, double norm_a, double norm_b) {
  if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
  return inner_product(a, b, d) / (norm_a * norm_b);
}

double inner_product(const VectorStore& s, size_t i, const VectorStore& t, size_t j) {
  if (s.dim != t.dim)
    throw DataError("DimMismatch: " + std::to_string(s.dim) + " vs " + std::to_string(t.dim));
  return inner_product(s.row(i), t.row(j), s.dim);
}

double l2_distance(const VectorStore& s, size_t i, const VectorStore& t, size_t j) {
  if (s.dim != t.dim)
    throw DataError("DimMismatch: " + std::to_string(s.dim) + " vs " + std::to_string(t.dim));
  return l2_distance(s.row(i), t.row(j), s.dim);
}

double metric_score(Metric m, const float* a, const float* b, size_t d, double norm_a,
                    double norm_b) {
  switch (m) {
    case Metric::ip: return inner_product(a, b, d);
    case Metric::l2: return -l2_distance(a, b, d);
    case Metric::cosine: return cosine_sim(a, b, d, norm_a, norm_b);
  }
  throw InternalError("unreachable metric");
}

// ---- wire formats -------------------------------------------------------

namespace {

std::vector<char> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("FileNotFound: " + path);
  std::streamsize len = in.tellg();
  in.seekg(0);
  std::vector<char> buf(static_cast<size_t>(len));
  if (len > 0 && !in.read(buf.data(), len)) throw DataError("IoError: short read on " + path);
  return buf;
}

template <typename Widen>
VectorStore load_xvecs(const std::string& path, size_t elem_size, Widen widen) {
  std::vector<char> buf = read_all(path);
  if (buf.empty()) throw DataError("EmptyFile: " + path);
  VectorStore store;
  size_t off = 0;
  while (off < buf.size()) {
    if (off + 4 > buf.size())
      throw DataError("MalformedRecord: truncated header at byte " + std::to_string(off) +
                      " in " + path);
    int32_t d;
    std::memcpy(&d, buf.data() + off, 4);
    off += 4;
    if (d <= 0) throw DataError("MalformedRecord: non-positive dim " + std::to_string(d));
    if (store.dim == 0)
      store.dim = static_cast<uint32_t>(d);
    else if (store.dim != static_cast<uint32_t>(d))
      throw DataError("MalformedRecord: dim changed from " + std::to_string(store.dim) + " to " +
                      std::to_string(d) + " in " + path);
    size_t need = static_cast<size_t>(d) * elem_size;
    if (off + need > buf.size())
      throw DataError("MalformedRecord: truncated record at byte " + std::to_string(off) + " in " +
                      path);
    size_t base = store.data.size();
    store.data.resize(base + d);
    widen(buf.data() + off, store.data.data() + base, static_cast<size_t>(d));
    off += need;
  }
  store.finalize();
  return store;
}

}  // namespace

VectorStore load_fvecs(const std::string& path) {
  return load_xvecs(path, 4, [](const char* src, float* dst, size_t d) {
    std::memcpy(dst, src, d * 4);
  });
}

VectorStore load_bvecs(const std::string& path) {
  return load_xvecs(path, 1, [](const char* src, float* dst, size_t d) {
    for (size_t i = 0; i < d; ++i) dst[i] = static_cast<float>(static_cast<uint8_t>(src[i]));
  });
}

void save_fvecs(const VectorStore& store, const std::string& path) {
  const size_t n = store.count();
  std::vector<char> buf;
  buf.reserve(n * (4 + store.dim * 4ull));
  int32_t d = static_cast<int32_t>(store.dim);
  for (size_t i = 0; i < n; ++i) {
    const char* dp = reinterpret_cast<const char*>(&d);
    buf.insert(buf.end(), dp, dp + 4);
    const char* vp = reinterpret_cast<const char*>(store.row(i));
    buf.insert(buf.end(), vp, vp + store.dim * 4ull);
  }
  atomic_write_file(path, buf.data(), buf.size());
}

std::vector<std::vector<int32_t>> load_ivecs(const std::string& path) {
  std::vector<char> buf = read_all(path);
  if (buf.empty()) throw DataError("EmptyFile: " + path);
  std::vector<std::vector<int32_t>> rows;
  size_t off = 0;
  while (off < buf.size()) {
    if (off + 4 > buf.size()) throw DataError("MalformedRecord: truncated header in " + path);
    int32_t k;
    std::memcpy(&k, buf.data() + off, 4);
    off += 4;
    if (k < 0) throw DataError("MalformedRecord: negative row length in " + path);
    if (off + static_cast<size_t>(k) * 4 > buf.size())
      throw DataError("MalformedRecord: truncated record in " + path);
    std::vector<int32_t> row(static_cast<size_t>(k));
    std::memcpy(row.data(), buf.data() + off, static_cast<size_t>(k) * 4);
    off += static_cast<size_t>(k) * 4;
    rows.push_back(std::move(row));
  }
  return rows;
}

void save_ivecs(const std::vector<std::vector<int32_t>>& rows, const std::string& path) {
  std::vector<char> buf;
  for (const auto& row : rows) {
    int32_t k = static_cast<int32_t>(row.size());
    const char* kp = reinterpret_cast<const char*>(&k);
    buf.insert(buf.end(), kp, kp + 4);
    const char* vp = reinterpret_cast<const char*>(row.data());
    buf.insert(buf.end(), vp, vp + row.size() * 4);
  }
  atomic_write_file(path, buf.data(), buf.size());
}

void atomic_write_file(const std::string& path, const void* bytes, size_t len) {
  std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("IoError: cannot open " + tmp + " for write");
    if (len > 0) out.write(static_cast<const char*>(bytes), static_cast<std::streamsize>(len));
    if (!out) throw DataError("IoError: short write on " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("IoError: rename " + tmp + " -> " + path + ": " + std::strerror(errno));
}

}  // namespace psp
