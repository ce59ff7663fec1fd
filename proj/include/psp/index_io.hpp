#pragma once

#include <string>
#include <utility>
#include <vector>

#include "psp/build.hpp"

namespace psp {

// Sectioned index file, little-endian throughout:
//   magic "PSP1", version u16, then sections until EOF.
// Each section: tag u32 (fourcc), payload length u64, payload, crc32 u32
// (zlib polynomial, over the payload only). Sections in fixed order:
// "HDR " (counts and build params), "CSR " (adjacency), "NAV " (navigation
// centroids + inverted lists), optional "AET " (termination model).
// Writes are atomic (temp file + rename) and byte-deterministic, so
// save(load(save(x))) is the identity on bytes.

struct SectionInfo {
  std::string tag;
  uint64_t payload_bytes = 0;
};

void save_index(const PspIndex& index, const std::string& path);

// Validates magic/version, every section checksum, and structural invariants
// (offset monotonicity, id ranges, degree cap) before returning.
PspIndex load_index(const std::string& path, std::vector<SectionInfo>* sections = nullptr);

}  // namespace psp
