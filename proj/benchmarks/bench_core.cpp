#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "segaudit/errorsim.hpp"
#include "segaudit/metrics.hpp"
#include "segaudit/phantom.hpp"
#include "segaudit/resample.hpp"
#include "segaudit/rng.hpp"

namespace {

using namespace segaudit;

VoxelGrid random_grid(std::int64_t n, std::uint64_t seed) {
  const auto g = VoxelGeometry::iso3d(n, n, n, 1.0);
  std::mt19937_64 rng(seed);
  std::vector<double> data(static_cast<std::size_t>(g.voxel_count()));
  for (auto& v : data) v = unit_uniform(rng);
  return VoxelGrid(g, std::move(data));
}

LabelMap ribbon_map() {
  CohortSpec cspec;
  cspec.n_per_group = 1;
  cspec.seed = 7;
  return generate_cohort(PhantomSpec::default_ribbon(), cspec)
      .subjects.front()
      .reference;
}

void BM_ResampleIntensityDown(benchmark::State& state) {
  const VoxelGrid grid = random_grid(state.range(0), 1);
  const auto factor = ScaleFactor::isotropic(0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(resample_intensity(grid, factor));
  }
}

void BM_ResampleIntensityUp(benchmark::State& state) {
  const VoxelGrid grid = random_grid(state.range(0), 2);
  const auto factor = ScaleFactor::isotropic(1.4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(resample_intensity(grid, factor));
  }
}

void BM_MajorityDownsample(benchmark::State& state) {
  const LabelMap m = ribbon_map();
  const auto factor = ScaleFactor::isotropic(0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(resample_labels_majority(m, factor));
  }
}

void BM_Perturb(benchmark::State& state) {
  const LabelMap m = ribbon_map();
  const ErrorModel model{ErrorKind::random_balanced, 0.5, 11};
  for (auto _ : state) {
    benchmark::DoNotOptimize(perturb(m, model));
  }
}

void BM_Dsc(benchmark::State& state) {
  const LabelMap m = ribbon_map();
  const LabelMap p = perturb(m, {ErrorKind::systematic_dilate, 0.3, 3});
  for (auto _ : state) {
    benchmark::DoNotOptimize(dsc(p, m, 1));
  }
}

}  // namespace

BENCHMARK(BM_ResampleIntensityDown)->Arg(32)->Arg(64);
BENCHMARK(BM_ResampleIntensityUp)->Arg(32)->Arg(64);
BENCHMARK(BM_MajorityDownsample);
BENCHMARK(BM_Perturb);
BENCHMARK(BM_Dsc);
BENCHMARK_MAIN();
