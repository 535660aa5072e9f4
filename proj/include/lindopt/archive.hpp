#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "lindopt/splitting.hpp"

namespace lindopt {

/// Header of a persisted isometry list. The binary layout is a fixed magic,
/// the header fields, then the m layer matrices as little-endian 64-bit
/// floats in row-major order. A JSON sidecar mirrors the header and carries
/// an FNV-1a checksum of the binary payload.
struct ArchiveHeader {
  std::uint32_t version = 1;
  std::string model;  // "kitaev" | "pspl"
  double tau = 0.0;
  std::uint32_t n_tau = 0;
  std::uint32_t sites = 0;
  std::uint32_t local_dim = 2;
  std::uint32_t rank = 0;
  std::uint32_t layers = 0;
  double alpha0 = 1.0;
  double alpha1 = 0.5;
};

struct IsometryArchive {
  ArchiveHeader header;
  IsometryVector isometries;
};

namespace archive {

std::uint64_t fnv1a(const unsigned char* data, std::size_t size);

/// Writes <path> (binary) and <path>.json (sidecar) atomically.
void save(const IsometryArchive& arc, const std::filesystem::path& path);

IsometryArchive load(const std::filesystem::path& path);

}  // namespace archive
}  // namespace lindopt
