#include <doctest.h>

#include <numeric>

#include "segaudit/error.hpp"
#include "segaudit/volume.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"

using namespace segaudit;
using testsupport::make_map;
using testsupport::random_map;

TEST_SUITE("volume") {

TEST_CASE("geometry validation") {
  CHECK_THROWS_AS(VoxelGeometry::iso3d(0, 4, 4, 1.0), validation_error);
  CHECK_THROWS_AS(VoxelGeometry::iso3d(4, 4, 4, 0.0), validation_error);
  CHECK_THROWS_AS(VoxelGeometry::iso3d(4, 4, 4, -1.0), validation_error);
  const std::int64_t dims[1] = {4};
  const double sizes[1] = {1.0};
  CHECK_THROWS_AS(VoxelGeometry::make(dims, sizes), validation_error);

  const auto g = VoxelGeometry::iso3d(4, 5, 6, 0.5);
  CHECK(g.voxel_count() == 120);
  CHECK(g.voxel_volume() == doctest::Approx(0.125));
  CHECK(g.extent_mm(1) == doctest::Approx(2.5));

  const auto g2 = VoxelGeometry::iso2d(4, 5, 2.0);
  CHECK(g2.ndim() == 2);
  CHECK(g2.dim(2) == 1);            // padded axis
  CHECK(g2.voxel_volume() == 4.0);  // mm^2
  CHECK(g2 != VoxelGeometry::iso3d(4, 5, 1, 2.0));
}

TEST_CASE("grid and map construction invariants") {
  const auto g = VoxelGeometry::iso3d(2, 2, 2, 1.0);
  CHECK_THROWS_AS(VoxelGrid(g, std::vector<double>(7)), validation_error);
  CHECK_THROWS_AS(
      VoxelGrid(g, std::vector<double>{0, 0, 0, 0, 0, 0, 0,
                                       std::numeric_limits<double>::infinity()}),
      validation_error);

  // every voxel label must be registered
  std::vector<std::int32_t> labels(8, 0);
  labels[3] = 7;
  CHECK_THROWS_AS(LabelMap(g, labels, LabelTable{}), validation_error);
  LabelTable t;
  t.add(7, "seven");
  CHECK_NOTHROW(LabelMap(g, labels, t));

  labels[3] = -1;
  CHECK_THROWS_AS(LabelMap(g, labels, t), validation_error);
}

TEST_CASE("label_volume unit voxels and scaling") {
  const auto g1 = VoxelGeometry::iso3d(5, 5, 5, 1.0);
  std::vector<std::int32_t> labels(125, 0);
  for (int i = 0; i < 10; ++i) labels[static_cast<std::size_t>(i)] = 1;

  const auto m1 = make_map(g1, labels);
  CHECK(label_volume(m1, 1) == 10.0);

  const auto g2 = VoxelGeometry::iso3d(5, 5, 5, 2.0);
  const auto m2 = make_map(g2, labels);
  CHECK(label_volume(m2, 1) == testsupport::volume_oracle(m2, 1));
  CHECK(label_volume(m2, 1) == 80.0);  // 10 x 2^3

  SUBCASE("label in table but absent from map") {
    LabelTable t;
    t.add(1, "one");
    t.add(9, "ghost");
    const LabelMap m(g1, labels, t);
    CHECK(label_volume(m, 9) == 0.0);
  }
  SUBCASE("unknown label id") {
    CHECK_THROWS_AS(label_volume(m1, 42), validation_error);
  }
}

TEST_CASE("label volumes sum to the grid volume") {
  // exact for power-of-two voxel sizes, 1e-12 relative otherwise
  for (const double mm : {1.0, 2.0, 0.5}) {
    const auto g = VoxelGeometry::iso3d(6, 5, 4, mm);
    const auto m = random_map(g, 3, 77);
    double sum = 0.0;
    for (auto id : m.table().ids()) sum += label_volume(m, id);
    CHECK(sum == static_cast<double>(g.voxel_count()) * g.voxel_volume());
  }
  const auto g = VoxelGeometry::iso3d(6, 5, 4, 1.3);
  const auto m = random_map(g, 3, 78);
  double sum = 0.0;
  for (auto id : m.table().ids()) sum += label_volume(m, id);
  CHECK(sum == doctest::Approx(static_cast<double>(g.voxel_count()) *
                               g.voxel_volume())
                   .epsilon(1e-12));
}

TEST_CASE("label_volume is additive over disjoint label sets") {
  const auto g = VoxelGeometry::iso3d(7, 6, 5, 1.25);
  const auto m = random_map(g, 4, 99);
  const double v12 = label_volume(m, 1) + label_volume(m, 2);
  const double v34 = label_volume(m, 3) + label_volume(m, 4);
  double nonzero = 0.0;
  for (auto id : m.table().ids()) {
    if (id != 0) nonzero += label_volume(m, id);
  }
  CHECK(nonzero == doctest::Approx(v12 + v34).epsilon(1e-12));
}

TEST_CASE("present_labels and count") {
  const auto g = VoxelGeometry::iso2d(3, 3, 1.0);
  const auto m = make_map(g, {0, 2, 2, 0, 5, 0, 0, 0, 2});
  CHECK(m.present_labels() == std::vector<std::int32_t>{0, 2, 5});
  CHECK(m.count(2) == 3);
  CHECK(m.count(5) == 1);
  CHECK(m.count(9) == 0);
}

}  // TEST_SUITE
