#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace psp {

// Exit codes used by the CLI; library code signals via exceptions.
//   0 ok, 2 usage, 3 data error, 4 internal invariant violation.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitInternal = 4 };

// Bad input data or parameters: malformed files, dim mismatches, out-of-range ids.
// Message starts with a short condition tag, e.g. "MalformedRecord: ...".
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// A "can't happen" condition — an internal invariant violated. Maps to exit 4.
struct InternalError : std::logic_error {
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

enum class Metric { ip, l2, cosine };

inline const char* metric_name(Metric m) {
  switch (m) {
    case Metric::ip: return "ip";
    case Metric::l2: return "l2";
    case Metric::cosine: return "cosine";
  }
  return "?";
}

inline Metric metric_from_name(const std::string& s) {
  if (s == "ip") return Metric::ip;
  if (s == "l2") return Metric::l2;
  if (s == "cosine") return Metric::cosine;
  throw DataError("InvalidParam: unknown metric '" + s + "'");
}

// Candidate entry in a bounded best-first pool. `dist` is the pool ordering key
// (smaller = better); for IP search the key is the negated score. `flag` marks
// a not-yet-expanded entry.
struct Neighbor {
  uint32_t id = 0;
  float dist = 0.f;
  bool flag = false;

  Neighbor() = default;
  Neighbor(uint32_t i, float d, bool f) : id(i), dist(d), flag(f) {}
  bool operator<(const Neighbor& o) const {
    if (dist != o.dist) return dist < o.dist;
    return id < o.id;  // deterministic tie-break: smaller id first
  }
};

// Insert nn into the sorted pool addr[0..size) keeping it sorted; returns the
// insertion position, or size when nn is worse than everything and the pool is
// full at `size`. Duplicate ids are left alone (callers dedup via visited sets).
inline unsigned insert_into_pool(Neighbor* addr, unsigned size, Neighbor nn) {
  unsigned left = 0, right = size - 1;
  if (nn < addr[left]) {
    std::memmove(&addr[left + 1], &addr[left], size * sizeof(Neighbor));
    addr[left] = nn;
    return left;
  }
  if (addr[right] < nn) {
    addr[size] = nn;
    return size;
  }
  while (left < right - 1) {
    unsigned mid = (left + right) / 2;
    if (nn < addr[mid])
      right = mid;
    else
      left = mid;
  }
  while (left > 0) {
    if (nn < addr[left]) break;
    if (addr[left].id == nn.id) return size + 1;
    left--;
  }
  if (addr[left].id == nn.id || addr[right].id == nn.id) return size + 1;
  std::memmove(&addr[right + 1], &addr[right], (size - right) * sizeof(Neighbor));
  addr[right] = nn;
  return right;
}

}  // namespace psp
