#include "segaudit/geometry.hpp"

#include <cmath>
#include <sstream>

#include "segaudit/error.hpp"

namespace segaudit {

VoxelGeometry VoxelGeometry::make(std::span<const std::int64_t> dims,
                                  std::span<const double> voxel_size_mm) {
  if (dims.size() != voxel_size_mm.size()) {
    throw validation_error("geometry: dims and voxel_size must have the same rank");
  }
  if (dims.size() < 2 || dims.size() > 3) {
    throw validation_error("geometry: expected 2 or 3 axes, got " +
                           std::to_string(dims.size()));
  }
  VoxelGeometry g;
  g.ndim_ = static_cast<int>(dims.size());
  for (std::size_t a = 0; a < dims.size(); ++a) {
    if (dims[a] < 1) {
      std::ostringstream os;
      os << "geometry: dim[" << a << "] = " << dims[a] << " must be >= 1";
      throw validation_error(os.str());
    }
    if (!(voxel_size_mm[a] > 0.0) || !std::isfinite(voxel_size_mm[a])) {
      std::ostringstream os;
      os << "geometry: voxel_size[" << a << "] = " << voxel_size_mm[a]
         << " must be positive and finite";
      throw validation_error(os.str());
    }
    g.dims_[a] = dims[a];
    g.size_[a] = voxel_size_mm[a];
  }
  return g;
}

VoxelGeometry VoxelGeometry::iso2d(std::int64_t nx, std::int64_t ny, double mm) {
  const std::int64_t d[2] = {nx, ny};
  const double s[2] = {mm, mm};
  return make(d, s);
}

VoxelGeometry VoxelGeometry::iso3d(std::int64_t nx, std::int64_t ny,
                                   std::int64_t nz, double mm) {
  const std::int64_t d[3] = {nx, ny, nz};
  const double s[3] = {mm, mm, mm};
  return make(d, s);
}

}  // namespace segaudit
