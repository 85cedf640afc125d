#pragma once

// Shared fixture helpers for the test suites.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "segaudit/rng.hpp"
#include "segaudit/volume.hpp"

namespace testsupport {

inline segaudit::LabelTable table_for(std::span<const std::int32_t> labels) {
  segaudit::LabelTable t;
  for (auto v : labels) {
    if (v != 0) t.add(v, "label_" + std::to_string(v));
  }
  return t;
}

inline segaudit::LabelMap make_map(const segaudit::VoxelGeometry& g,
                                   std::vector<std::int32_t> labels) {
  auto table = table_for(labels);
  return segaudit::LabelMap(g, std::move(labels), std::move(table));
}

inline segaudit::LabelMap random_map(const segaudit::VoxelGeometry& g,
                                     std::int32_t max_label, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::int32_t> labels(static_cast<std::size_t>(g.voxel_count()));
  for (auto& v : labels) {
    v = static_cast<std::int32_t>(
        segaudit::bounded_uniform(rng, static_cast<std::uint64_t>(max_label) + 1));
  }
  return make_map(g, std::move(labels));
}

inline segaudit::VoxelGrid random_grid(const segaudit::VoxelGeometry& g,
                                       std::uint64_t seed, int channels = 1) {
  std::mt19937_64 rng(seed);
  std::vector<double> data(static_cast<std::size_t>(g.voxel_count()) *
                           static_cast<std::size_t>(channels));
  for (auto& v : data) v = 200.0 * segaudit::unit_uniform(rng) - 100.0;
  return segaudit::VoxelGrid(g, std::move(data), channels);
}

/// Values that survive a float32 payload exactly.
inline segaudit::VoxelGrid random_float_grid(const segaudit::VoxelGeometry& g,
                                             std::uint64_t seed, int channels = 1) {
  std::mt19937_64 rng(seed);
  std::vector<double> data(static_cast<std::size_t>(g.voxel_count()) *
                           static_cast<std::size_t>(channels));
  for (auto& v : data) {
    v = static_cast<double>(
        static_cast<float>(200.0 * segaudit::unit_uniform(rng) - 100.0));
  }
  return segaudit::VoxelGrid(g, std::move(data), channels);
}

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("segaudit_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
