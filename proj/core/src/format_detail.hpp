#pragma once

// Internal glue shared by the NIfTI-1 and SimpleVol codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <vector>

#include "segaudit/io.hpp"

namespace segaudit::detail {

/// Decoded payload prior to intensity/label interpretation. Data is already
/// in the canonical layout (channel-major, z fastest).
struct RawVolume {
  VoxelGeometry geometry;
  int channels = 1;
  std::vector<double> data;
  bool integer_source = false;  // payload dtype was an integer type
  bool scaled = false;          // scl_slope/scl_inter were applied
};

inline bool host_little_endian() {
  return std::endian::native == std::endian::little;
}

template <typename T>
T byteswap_value(T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
    std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  std::memcpy(&v, b, sizeof(T));
  return v;
}

std::size_t scalar_size(ScalarType t);

/// Payload bytes -> doubles. `swap` flips the stored byte order first.
std::vector<double> decode_payload(std::span<const unsigned char> bytes,
                                   ScalarType t, std::size_t count, bool swap);

/// Doubles -> little-endian payload bytes. Integer dtypes round and
/// range-check; float32 narrows.
std::vector<unsigned char> encode_payload(std::span<const double> values,
                                          ScalarType t);

// format codecs
RawVolume nifti_load(const std::filesystem::path& path, bool as_labels);
void nifti_save(const VoxelGeometry& geometry, int channels,
                std::span<const double> canonical, ScalarType dtype,
                const std::filesystem::path& path);

RawVolume simplevol_load(const std::filesystem::path& path);
void simplevol_save(const VoxelGeometry& geometry, int channels,
                    std::span<const double> canonical, ScalarType dtype,
                    const std::filesystem::path& path);

}  // namespace segaudit::detail
