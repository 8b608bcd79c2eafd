#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "gfflab/field.hpp"

namespace gfflab {

/// Binary field snapshot ("GFFM"), all numbers little-endian:
///
///   offset  size  content
///   0       4     magic "GFFM"
///   4       4     u32 format version (kSnapshotVersion)
///   8       4     u32 nx
///   12      4     u32 ny
///   16      8     f64 spacing
///   24      16    f64 origin x, origin y
///   40      8     u64 seed
///   48      1     u8 kind (0 zero-boundary, 1 pinned-torus, 2 custom)
///   49      1     u8 pin flag (0 or 1)
///   50      32    if pin flag: f64 centre x, centre y, radius, subtracted value
///   ...     8*nx*ny  f64 values, row-major (j outer, i inner)
inline constexpr std::uint32_t kSnapshotVersion = 1;

std::string encode_snapshot(const FieldSample& field);
/// Throws ParseError (with the byte offset) on bad magic, version mismatch,
/// unknown kind or truncated payload.
FieldSample decode_snapshot(std::string_view bytes);

void save_snapshot(const FieldSample& field, const std::filesystem::path& path);
FieldSample load_snapshot(const std::filesystem::path& path);

/// 64-bit FNV-1a checksum of a byte string.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Whole-file helpers; throw ConfigError when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace gfflab
