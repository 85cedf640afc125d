#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "segaudit/geometry.hpp"

namespace segaudit {

/// Known label ids with display names. Id 0 ("background") is always present.
class LabelTable {
 public:
  LabelTable();

  void add(std::int32_t id, std::string name);
  bool contains(std::int32_t id) const { return entries_.count(id) != 0; }
  const std::string& name(std::int32_t id) const;
  std::vector<std::int32_t> ids() const;  // ascending
  const std::map<std::int32_t, std::string>& entries() const { return entries_; }

  bool operator==(const LabelTable&) const = default;

 private:
  std::map<std::int32_t, std::string> entries_;
};

/// Scalar (or multi-channel) volume on a VoxelGeometry. Data is double in the
/// canonical layout: channel-major planes, each plane row-major in (x, y, z)
/// with z fastest. Immutable after construction; all values must be finite.
class VoxelGrid {
 public:
  VoxelGrid(VoxelGeometry geometry, std::vector<double> data, int channels = 1);

  const VoxelGeometry& geometry() const { return geometry_; }
  int channels() const { return channels_; }
  std::span<const double> data() const { return data_; }
  std::span<const double> channel(int c) const;

  std::int64_t index(std::int64_t x, std::int64_t y, std::int64_t z = 0,
                     int c = 0) const {
    const auto& g = geometry_;
    return ((static_cast<std::int64_t>(c) * g.dim(0) + x) * g.dim(1) + y) * g.dim(2) + z;
  }
  double at(std::int64_t x, std::int64_t y, std::int64_t z = 0, int c = 0) const {
    return data_[static_cast<std::size_t>(index(x, y, z, c))];
  }

  bool operator==(const VoxelGrid&) const = default;

 private:
  VoxelGeometry geometry_;
  int channels_ = 1;
  std::vector<double> data_;
};

/// Hard segmentation: one non-negative label per voxel, each id registered in
/// the label table. Same canonical layout as VoxelGrid, single channel.
class LabelMap {
 public:
  LabelMap(VoxelGeometry geometry, std::vector<std::int32_t> labels,
           LabelTable table);

  const VoxelGeometry& geometry() const { return geometry_; }
  const LabelTable& table() const { return table_; }
  std::span<const std::int32_t> labels() const { return labels_; }

  std::int64_t index(std::int64_t x, std::int64_t y, std::int64_t z = 0) const {
    return (x * geometry_.dim(1) + y) * geometry_.dim(2) + z;
  }
  std::int32_t at(std::int64_t x, std::int64_t y, std::int64_t z = 0) const {
    return labels_[static_cast<std::size_t>(index(x, y, z))];
  }

  /// Voxel count for one label (no table check).
  std::int64_t count(std::int32_t label) const;

  /// Ascending ids of labels that actually occur in the map.
  std::vector<std::int32_t> present_labels() const;

  bool operator==(const LabelMap&) const = default;

 private:
  VoxelGeometry geometry_;
  std::vector<std::int32_t> labels_;
  LabelTable table_;
};

/// Physical volume of one label: voxel count times voxel volume (mm^3, or
/// mm^2 for 2D grids). Throws validation_error for ids not in the table.
double label_volume(const LabelMap& m, std::int32_t label);

}  // namespace segaudit
