#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace segaudit {

/// Axis-aligned voxel lattice: per-axis voxel counts plus the physical voxel
/// size in millimeters. Two or three axes; axis order is (x, y, z) and the
/// canonical in-memory layout is row-major in that order (z varies fastest).
class VoxelGeometry {
 public:
  VoxelGeometry() = default;

  /// Throws validation_error unless 2 <= #axes <= 3, every dim >= 1 and every
  /// voxel size is positive and finite.
  static VoxelGeometry make(std::span<const std::int64_t> dims,
                            std::span<const double> voxel_size_mm);
  static VoxelGeometry iso2d(std::int64_t nx, std::int64_t ny, double mm);
  static VoxelGeometry iso3d(std::int64_t nx, std::int64_t ny, std::int64_t nz,
                             double mm);

  int ndim() const { return ndim_; }

  /// Axes beyond ndim() read as a single voxel of size 1 mm so 2D grids can
  /// be traversed with ordinary 3D loops.
  std::int64_t dim(int axis) const { return dims_[static_cast<std::size_t>(axis)]; }
  double voxel_size(int axis) const { return size_[static_cast<std::size_t>(axis)]; }

  std::int64_t voxel_count() const { return dims_[0] * dims_[1] * dims_[2]; }

  /// mm^3 for 3D grids, mm^2 for 2D.
  double voxel_volume() const { return size_[0] * size_[1] * size_[2]; }

  /// Physical extent along one axis: dim * voxel_size.
  double extent_mm(int axis) const {
    return static_cast<double>(dim(axis)) * voxel_size(axis);
  }

  bool isotropic() const { return size_[0] == size_[1] && (ndim_ < 3 || size_[1] == size_[2]); }

  bool operator==(const VoxelGeometry&) const = default;

 private:
  int ndim_ = 0;
  std::array<std::int64_t, 3> dims_{1, 1, 1};
  std::array<double, 3> size_{1.0, 1.0, 1.0};
};

}  // namespace segaudit
