#pragma once

#include <filesystem>
#include <string_view>

#include "segaudit/volume.hpp"

namespace segaudit {

enum class VolumeFormat { nifti, simplevol };

enum class ScalarType { uint8, int16, int32, float32, float64 };

std::string_view to_string(ScalarType t);
ScalarType scalar_type_from_string(std::string_view s);

// File formats, inferred from the name (.nii / .nii.gz -> NIfTI-1,
// .svol -> SimpleVol) with a content sniff as fallback.
//
// NIfTI-1 loading accepts uint8/int16/int32/float32 in either byte order,
// applies scl_slope/scl_inter to intensity data (and rejects non-identity
// scaling on labels), reorients axis-aligned permutation/flip affines to
// canonical RAS and rejects oblique ones. Label data must be integral within
// 1e-6 and non-negative. Writing is always little-endian.
//
// SimpleVol is a JSON header {dims, voxel_size, dtype, channels, data_file}
// next to a raw little-endian payload in canonical layout; see
// docs/formats.md for the exact byte layout.

VoxelGrid load_intensity(const std::filesystem::path& path);
LabelMap load_labels(const std::filesystem::path& path);

/// Intensity defaults: float32 payload for NIfTI, float64 for SimpleVol.
void save_volume(const VoxelGrid& grid, const std::filesystem::path& path);
void save_volume(const VoxelGrid& grid, const std::filesystem::path& path,
                 ScalarType dtype);

/// Labels default to an int32 payload; uint8/int16 are accepted when all ids
/// fit the range.
void save_volume(const LabelMap& labels, const std::filesystem::path& path);
void save_volume(const LabelMap& labels, const std::filesystem::path& path,
                 ScalarType dtype);

}  // namespace segaudit
