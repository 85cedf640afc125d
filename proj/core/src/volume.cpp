#include "segaudit/volume.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "segaudit/error.hpp"

namespace segaudit {

LabelTable::LabelTable() { entries_.emplace(0, "background"); }

void LabelTable::add(std::int32_t id, std::string name) {
  if (id < 0) throw validation_error("label table: ids must be non-negative");
  if (id == 0) return;  // background is fixed
  entries_[id] = std::move(name);
}

const std::string& LabelTable::name(std::int32_t id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) {
    throw validation_error("label table: unknown id " + std::to_string(id));
  }
  return it->second;
}

std::vector<std::int32_t> LabelTable::ids() const {
  std::vector<std::int32_t> out;
  out.reserve(entries_.size());
  for (const auto& [id, _] : entries_) out.push_back(id);
  return out;
}

VoxelGrid::VoxelGrid(VoxelGeometry geometry, std::vector<double> data,
                     int channels)
    : geometry_(geometry), channels_(channels), data_(std::move(data)) {
  if (geometry_.ndim() == 0) throw validation_error("voxel grid: empty geometry");
  if (channels_ < 1) throw validation_error("voxel grid: channels must be >= 1");
  const auto expected =
      static_cast<std::size_t>(geometry_.voxel_count()) * static_cast<std::size_t>(channels_);
  if (data_.size() != expected) {
    std::ostringstream os;
    os << "voxel grid: data length " << data_.size() << " != dims product x channels "
       << expected;
    throw validation_error(os.str());
  }
  for (double v : data_) {
    if (!std::isfinite(v)) {
      throw validation_error("voxel grid: data contains a non-finite value");
    }
  }
}

std::span<const double> VoxelGrid::channel(int c) const {
  const auto n = static_cast<std::size_t>(geometry_.voxel_count());
  return std::span<const double>(data_).subspan(static_cast<std::size_t>(c) * n, n);
}

LabelMap::LabelMap(VoxelGeometry geometry, std::vector<std::int32_t> labels,
                   LabelTable table)
    : geometry_(geometry), labels_(std::move(labels)), table_(std::move(table)) {
  if (geometry_.ndim() == 0) throw validation_error("label map: empty geometry");
  if (labels_.size() != static_cast<std::size_t>(geometry_.voxel_count())) {
    throw validation_error("label map: label count does not match geometry");
  }
  std::unordered_set<std::int32_t> known;
  for (const auto& [id, _] : table_.entries()) known.insert(id);
  for (std::int32_t v : labels_) {
    if (v < 0) throw validation_error("label map: negative label value");
    if (!known.count(v)) {
      throw validation_error("label map: voxel label " + std::to_string(v) +
                             " missing from label table");
    }
  }
}

std::int64_t LabelMap::count(std::int32_t label) const {
  return std::count(labels_.begin(), labels_.end(), label);
}

std::vector<std::int32_t> LabelMap::present_labels() const {
  std::unordered_set<std::int32_t> seen(labels_.begin(), labels_.end());
  std::vector<std::int32_t> out(seen.begin(), seen.end());
  std::sort(out.begin(), out.end());
  return out;
}

double label_volume(const LabelMap& m, std::int32_t label) {
  if (!m.table().contains(label)) {
    throw validation_error("label_volume: unknown label id " + std::to_string(label));
  }
  return static_cast<double>(m.count(label)) * m.geometry().voxel_volume();
}

}  // namespace segaudit
