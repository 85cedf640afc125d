#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segaudit/io.hpp"
#include "segaudit/volume.hpp"

namespace segaudit {

enum class StructureKind { compact_ellipsoid, folded_ribbon };
enum class Group { H, L };
enum class Split { train, val, test };

std::string_view to_string(Group g);
std::string_view to_string(Split s);

/// Synthetic structure description. The ellipsoid is the compact shape, the
/// folded ribbon a sinusoidally folded sheet of constant thickness standing
/// in for convoluted cortex-like structures. Voxelization rule: a voxel is
/// foreground iff its center lies inside the analytic shape, which keeps the
/// analytic volume an exact oracle (the ribbon's column cross-section is an
/// interval of exactly its thickness, so volume = span_x * span_y * thickness).
struct PhantomSpec {
  StructureKind kind = StructureKind::folded_ribbon;
  VoxelGeometry grid;

  // compact-ellipsoid: base semi-axes, centered in the grid
  std::array<double, 3> ellipsoid_radii_mm{10.0, 9.0, 8.0};

  // folded-ribbon: |z - mid - amplitude*sin(2*pi*x/wavelength)| <= thickness/2
  // over an in-plane span inset by margin on each side
  double ribbon_thickness_mm = 2.0;
  double ribbon_wavelength_mm = 16.0;
  double ribbon_amplitude_mm = 5.0;
  double ribbon_margin_mm = 2.0;

  // intensity carrier: foreground/background means plus Gaussian noise
  double foreground_mean = 110.0;
  double background_mean = 30.0;
  double noise_sigma = 10.0;

  static PhantomSpec default_ellipsoid();
  static PhantomSpec default_ribbon();
};

/// Cohort construction parameters. volume_effect is the ratio of group mean
/// structure volume H : L (values below 1 make group L the larger one);
/// subjects jitter around their group mean log-normally with
/// scale_jitter_sigma in log-volume units, so group volume medians differ by
/// exactly volume_effect.
struct CohortSpec {
  int n_per_group = 10;
  double volume_effect = 1.0;
  double scale_jitter_sigma = 0.05;
  std::array<double, 3> split_fractions{5.0 / 9.0, 1.0 / 9.0, 3.0 / 9.0};
  std::uint64_t seed = 0;
};

struct Subject {
  std::string id;
  Group group = Group::H;
  VoxelGrid image;
  LabelMap reference;
  std::optional<LabelMap> prediction;
  double native_voxel_size_mm = 1.0;
  double analytic_volume_mm3 = 0.0;
};

struct Cohort {
  std::vector<Subject> subjects;
  std::vector<Split> splits;  // parallel to subjects
};

/// Foreground label id used by all phantoms (0 is background).
inline constexpr std::int32_t kStructureLabel = 1;

/// Deterministic cohort generation: per-subject seeds derive from the cohort
/// seed and subject index; split assignment is balanced per group with
/// largest-remainder rounding of the fractions.
Cohort generate_cohort(const PhantomSpec& pspec, const CohortSpec& cspec);

/// Indices of the n smallest and n largest subjects by reference structure
/// volume. Small half ascending, large half descending; ties break on id.
struct Stratification {
  std::vector<std::size_t> small;
  std::vector<std::size_t> large;
};
Stratification stratify_by_volume(std::span<const Subject> subjects, int n,
                                  std::int32_t label = kStructureLabel);

/// Resample every subject to its group resolution (H -> high_mm, L -> low_mm,
/// isotropic; intensity linearly, labels by majority vote) and retag
/// native_voxel_size_mm. Subjects already on the target grid are untouched.
Cohort assign_group_resolutions(Cohort cohort, double high_mm, double low_mm);

/// Write volumes plus a JSON manifest under `dir` (img/, ref/, pred/
/// subdirectories). Returns the manifest path.
std::filesystem::path write_cohort(const Cohort& cohort,
                                   const std::filesystem::path& dir,
                                   VolumeFormat format = VolumeFormat::nifti);

/// Load a cohort written by write_cohort (volumes included).
Cohort load_cohort(const std::filesystem::path& manifest);

/// One manifest row, paths relative to the manifest directory.
struct ManifestEntry {
  std::string id;
  std::string group;
  std::string split;
  double native_voxel_size_mm = 1.0;
  double analytic_volume_mm3 = 0.0;
  std::string image;
  std::string reference;
  std::optional<std::string> prediction;
};

/// Manifest metadata without loading any volume data.
std::vector<ManifestEntry> read_cohort_manifest(const std::filesystem::path& manifest);

}  // namespace segaudit
