#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>

#include "segaudit/volume.hpp"

namespace segaudit {

// Cross-resolution operators. Conventions shared by everything here:
//  - voxel centers sit at (i + 0.5) * voxel_size; source and target fields of
//    view share the origin corner, so a factor of 1 is an exact identity,
//  - output dims are round-half-away-from-zero of dims * factor, floored at 1,
//  - intensity interpolation is separable linear with clamp-to-edge borders.

/// Per-axis ratio source_voxel_size / target_voxel_size. Values above 1 mean
/// upsampling. Components are validated against hard bounds at construction.
class ScaleFactor {
 public:
  static constexpr double kMinFactor = 0.125;
  static constexpr double kMaxFactor = 8.0;

  static ScaleFactor isotropic(double f);
  static ScaleFactor make(std::span<const double> components,
                          double min_bound = kMinFactor,
                          double max_bound = kMaxFactor);

  double component(int axis) const { return f_[static_cast<std::size_t>(axis)]; }
  bool is_identity() const { return f_[0] == 1.0 && f_[1] == 1.0 && f_[2] == 1.0; }

  bool operator==(const ScaleFactor&) const = default;

 private:
  std::array<double, 3> f_{1.0, 1.0, 1.0};
};

/// Log-uniform scale sampling range for augmentation. The default covers the
/// widest common high/low resolution ratio (1.4) symmetrically in log space.
struct AugmentationPolicy {
  double min_factor = 0.7;
  double max_factor = 1.43;
  bool isotropic = true;
};

/// Target geometry induced by a scale factor: dims rounded half away from
/// zero (min 1), voxel size divided by the factor.
VoxelGeometry scaled_geometry(const VoxelGeometry& source, const ScaleFactor& f);

/// Separable linear (bilinear/trilinear) interpolation onto the target grid,
/// applied per channel. Never overshoots the input range.
VoxelGrid resample_intensity(const VoxelGrid& grid, const VoxelGeometry& target);
VoxelGrid resample_intensity(const VoxelGrid& grid, const ScaleFactor& factor);

/// Majority-vote label interpolation: each target voxel takes the most
/// frequent label among source voxels whose centers fall inside its physical
/// footprint; ties go to the lowest label id; empty footprints (upsampling)
/// fall back to the nearest source voxel.
LabelMap resample_labels_majority(const LabelMap& m, const VoxelGeometry& target);
LabelMap resample_labels_majority(const LabelMap& m, const ScaleFactor& factor);

/// Network-style feature rescaling: channel-wise linear interpolation of a
/// feature stack by a bounded factor, numerically identical to
/// resample_intensity per channel. Standalone equivalent of a
/// resolution-normalizing first scale transition.
VoxelGrid vinn_rescale(const VoxelGrid& features, const ScaleFactor& factor);

/// Deterministic log-uniform factor draw; isotropic policies return equal
/// per-axis components.
ScaleFactor sample_scale_factor(const AugmentationPolicy& policy,
                                std::uint64_t seed);

/// Rescale an image/label pair to the identical target geometry (intensity
/// linearly, labels by majority vote).
std::pair<VoxelGrid, LabelMap> apply_scale_augmentation(const VoxelGrid& image,
                                                        const LabelMap& labels,
                                                        const ScaleFactor& factor);

}  // namespace segaudit
