#include "segaudit/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "segaudit/error.hpp"
#include "segaudit/resample.hpp"
#include "segaudit/rng.hpp"

namespace segaudit {

namespace {

using nlohmann::json;

constexpr double kPi = 3.14159265358979323846;

// seed salts for the independent streams derived from a cohort seed
constexpr std::uint64_t kSaltSubject = 0x5375626a65637400ull;  // "Subject"
constexpr std::uint64_t kSaltSplit = 0x53706c6974000000ull;    // "Split"

struct ShapeParams {
  StructureKind kind;
  std::array<double, 3> center;
  std::array<double, 3> radii;      // ellipsoid
  double thickness = 0.0;           // ribbon
  double wavelength = 0.0;
  double amplitude = 0.0;
  double margin = 0.0;
  std::array<double, 3> extent;
};

ShapeParams shape_for(const PhantomSpec& spec, double volume_multiplier) {
  if (spec.grid.ndim() != 3) {
    throw validation_error("phantom: grid geometry must be 3D");
  }
  ShapeParams p;
  p.kind = spec.kind;
  for (int a = 0; a < 3; ++a) p.extent[a] = spec.grid.extent_mm(a);
  p.center = {p.extent[0] / 2.0, p.extent[1] / 2.0, p.extent[2] / 2.0};
  if (spec.kind == StructureKind::compact_ellipsoid) {
    const double scale = std::cbrt(volume_multiplier);
    for (int a = 0; a < 3; ++a) {
      p.radii[a] = spec.ellipsoid_radii_mm[static_cast<std::size_t>(a)] * scale;
      if (p.radii[a] <= 0.0) throw validation_error("phantom: radius must be positive");
      if (p.center[a] - p.radii[a] < spec.grid.voxel_size(a) ||
          p.center[a] + p.radii[a] > p.extent[a] - spec.grid.voxel_size(a)) {
        throw validation_error("phantom: ellipsoid exceeds grid margin");
      }
    }
  } else {
    // thickness carries the whole volume effect so the analytic volume stays
    // span_x * span_y * thickness exactly
    p.thickness = spec.ribbon_thickness_mm * volume_multiplier;
    p.wavelength = spec.ribbon_wavelength_mm;
    p.amplitude = spec.ribbon_amplitude_mm;
    p.margin = spec.ribbon_margin_mm;
    if (p.thickness <= 0.0) throw validation_error("phantom: thickness must be positive");
    if (p.wavelength <= 0.0) throw validation_error("phantom: wavelength must be positive");
    if (p.margin < spec.grid.voxel_size(0) || p.margin < spec.grid.voxel_size(1)) {
      throw validation_error("phantom: ribbon margin below one voxel");
    }
    const double z_reach = p.amplitude + p.thickness / 2.0;
    if (p.center[2] - z_reach < spec.grid.voxel_size(2) ||
        p.center[2] + z_reach > p.extent[2] - spec.grid.voxel_size(2)) {
      throw validation_error("phantom: ribbon exceeds grid margin");
    }
    if (2.0 * p.margin >= p.extent[0] || 2.0 * p.margin >= p.extent[1]) {
      throw validation_error("phantom: ribbon margin leaves no in-plane span");
    }
  }
  return p;
}

bool inside_shape(const ShapeParams& p, double X, double Y, double Z) {
  if (p.kind == StructureKind::compact_ellipsoid) {
    const double dx = (X - p.center[0]) / p.radii[0];
    const double dy = (Y - p.center[1]) / p.radii[1];
    const double dz = (Z - p.center[2]) / p.radii[2];
    return dx * dx + dy * dy + dz * dz <= 1.0;
  }
  if (X < p.margin || X > p.extent[0] - p.margin) return false;
  if (Y < p.margin || Y > p.extent[1] - p.margin) return false;
  const double mid = p.center[2] + p.amplitude * std::sin(2.0 * kPi * X / p.wavelength);
  return std::abs(Z - mid) <= p.thickness / 2.0;
}

double analytic_volume(const ShapeParams& p) {
  if (p.kind == StructureKind::compact_ellipsoid) {
    return 4.0 / 3.0 * kPi * p.radii[0] * p.radii[1] * p.radii[2];
  }
  return (p.extent[0] - 2.0 * p.margin) * (p.extent[1] - 2.0 * p.margin) *
         p.thickness;
}

Subject make_subject(const PhantomSpec& spec, std::string id, Group group,
                     double volume_multiplier, std::uint64_t seed) {
  const ShapeParams shape = shape_for(spec, volume_multiplier);
  const auto& g = spec.grid;
  const std::size_t n = static_cast<std::size_t>(g.voxel_count());

  std::vector<std::int32_t> labels(n);
  std::vector<double> image(n);
  std::mt19937_64 rng(seed);

  std::size_t i = 0;
  for (std::int64_t x = 0; x < g.dim(0); ++x) {
    const double X = (static_cast<double>(x) + 0.5) * g.voxel_size(0);
    for (std::int64_t y = 0; y < g.dim(1); ++y) {
      const double Y = (static_cast<double>(y) + 0.5) * g.voxel_size(1);
      for (std::int64_t z = 0; z < g.dim(2); ++z, ++i) {
        const double Z = (static_cast<double>(z) + 0.5) * g.voxel_size(2);
        const bool fg = inside_shape(shape, X, Y, Z);
        labels[i] = fg ? kStructureLabel : 0;
        const double mean = fg ? spec.foreground_mean : spec.background_mean;
        // quantized to float32 so written cohorts reload bit-identically
        image[i] = static_cast<double>(
            static_cast<float>(mean + spec.noise_sigma * gaussian(rng)));
      }
    }
  }

  LabelTable table;
  table.add(kStructureLabel, "structure");
  Subject s{.id = std::move(id),
            .group = group,
            .image = VoxelGrid(g, std::move(image)),
            .reference = LabelMap(g, std::move(labels), std::move(table)),
            .prediction = std::nullopt,
            .native_voxel_size_mm = g.voxel_size(0),
            .analytic_volume_mm3 = analytic_volume(shape)};
  return s;
}

std::array<int, 3> split_counts(int n_group, const std::array<double, 3>& fractions) {
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9) {
    throw validation_error("cohort: split fractions must sum to 1");
  }
  std::array<int, 3> counts{};
  std::array<double, 3> remainder{};
  int assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double exact = fractions[static_cast<std::size_t>(s)] * n_group;
    counts[static_cast<std::size_t>(s)] = static_cast<int>(std::floor(exact + 1e-9));
    remainder[static_cast<std::size_t>(s)] =
        exact - counts[static_cast<std::size_t>(s)];
    assigned += counts[static_cast<std::size_t>(s)];
  }
  while (assigned < n_group) {  // largest remainder
    int best = 0;
    for (int s = 1; s < 3; ++s) {
      if (remainder[static_cast<std::size_t>(s)] >
          remainder[static_cast<std::size_t>(best)]) {
        best = s;
      }
    }
    ++counts[static_cast<std::size_t>(best)];
    remainder[static_cast<std::size_t>(best)] = -1.0;
    ++assigned;
  }
  return counts;
}

std::string subject_file_name(const Subject& s, VolumeFormat fmt) {
  return s.id + (fmt == VolumeFormat::nifti ? ".nii.gz" : ".svol");
}

}  // namespace

std::string_view to_string(Group g) { return g == Group::H ? "H" : "L"; }

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  throw validation_error("unknown split");
}

PhantomSpec PhantomSpec::default_ellipsoid() {
  PhantomSpec s;
  s.kind = StructureKind::compact_ellipsoid;
  s.grid = VoxelGeometry::iso3d(48, 48, 48, 1.0);
  return s;
}

PhantomSpec PhantomSpec::default_ribbon() {
  PhantomSpec s;
  s.kind = StructureKind::folded_ribbon;
  s.grid = VoxelGeometry::iso3d(64, 64, 32, 1.0);
  return s;
}

Cohort generate_cohort(const PhantomSpec& pspec, const CohortSpec& cspec) {
  if (cspec.n_per_group < 1) {
    throw validation_error("cohort: n_per_group must be >= 1");
  }
  if (!(cspec.volume_effect > 0.0)) {
    throw validation_error("cohort: volume_effect must be positive");
  }
  if (cspec.scale_jitter_sigma < 0.0) {
    throw validation_error("cohort: scale_jitter_sigma must be >= 0");
  }

  Cohort cohort;
  const double half_log_effect = 0.5 * std::log(cspec.volume_effect);
  std::size_t index = 0;
  for (Group group : {Group::H, Group::L}) {
    const double group_log = group == Group::H ? half_log_effect : -half_log_effect;
    for (int i = 0; i < cspec.n_per_group; ++i, ++index) {
      const std::uint64_t seed =
          mix_seed(mix_seed(cspec.seed, kSaltSubject), index);
      std::mt19937_64 rng(seed);
      const double jitter = cspec.scale_jitter_sigma * gaussian(rng);
      const double multiplier = std::exp(group_log + jitter);
      char id[32];
      std::snprintf(id, sizeof(id), "s%03zu_%s", index,
                    std::string(to_string(group)).c_str());
      cohort.subjects.push_back(
          make_subject(pspec, id, group, multiplier, mix_seed(seed, 1)));
    }
  }

  // Balanced splits: identical per-group counts, order shuffled per group.
  cohort.splits.assign(cohort.subjects.size(), Split::train);
  const auto counts = split_counts(cspec.n_per_group, cspec.split_fractions);
  std::mt19937_64 split_rng(mix_seed(cspec.seed, kSaltSplit));
  for (Group group : {Group::H, Group::L}) {
    std::vector<std::size_t> members;
    for (std::size_t s = 0; s < cohort.subjects.size(); ++s) {
      if (cohort.subjects[s].group == group) members.push_back(s);
    }
    for (std::size_t k = members.size(); k > 1; --k) {  // Fisher-Yates
      const auto j = static_cast<std::size_t>(bounded_uniform(split_rng, k));
      std::swap(members[k - 1], members[j]);
    }
    std::size_t at = 0;
    const Split kinds[3] = {Split::train, Split::val, Split::test};
    for (int s = 0; s < 3; ++s) {
      for (int c = 0; c < counts[static_cast<std::size_t>(s)]; ++c, ++at) {
        cohort.splits[members[at]] = kinds[s];
      }
    }
  }
  return cohort;
}

Stratification stratify_by_volume(std::span<const Subject> subjects, int n,
                                  std::int32_t label) {
  if (n < 0 || 2 * static_cast<std::size_t>(n) > subjects.size()) {
    throw validation_error("stratify_by_volume: need at least 2n subjects");
  }
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(subjects.size());
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    keyed.emplace_back(label_volume(subjects[i].reference, label), i);
  }
  // One total order (volume, id): small = first n ascending, large = last n
  // descending, so the halves are disjoint even with ties at the cut.
  std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return subjects[a.second].id < subjects[b.second].id;
  });
  Stratification out;
  for (int i = 0; i < n; ++i) {
    out.small.push_back(keyed[static_cast<std::size_t>(i)].second);
    out.large.push_back(keyed[keyed.size() - 1 - static_cast<std::size_t>(i)].second);
  }
  return out;
}

Cohort assign_group_resolutions(Cohort cohort, double high_mm, double low_mm) {
  if (!(high_mm > 0.0) || !(low_mm > 0.0) || high_mm > low_mm) {
    throw validation_error(
        "resolution pair: need 0 < high_mm <= low_mm (smaller voxel = higher "
        "resolution)");
  }
  for (auto& s : cohort.subjects) {
    const double target_mm = s.group == Group::L ? low_mm : high_mm;
    const auto& g = s.reference.geometry();
    std::vector<std::int64_t> dims;
    std::vector<double> sizes;
    for (int a = 0; a < g.ndim(); ++a) {
      dims.push_back(std::max<std::int64_t>(
          1, std::llround(static_cast<double>(g.dim(a)) * g.voxel_size(a) /
                          target_mm)));
      sizes.push_back(target_mm);
    }
    const auto target = VoxelGeometry::make(dims, sizes);
    if (target != g) {
      s.image = resample_intensity(s.image, target);
      s.reference = resample_labels_majority(s.reference, target);
      if (s.prediction) {
        s.prediction = resample_labels_majority(*s.prediction, target);
      }
    }
    s.native_voxel_size_mm = target_mm;
  }
  return cohort;
}

std::filesystem::path write_cohort(const Cohort& cohort,
                                   const std::filesystem::path& dir,
                                   VolumeFormat format) {
  if (cohort.splits.size() != cohort.subjects.size()) {
    throw validation_error("cohort: split assignment out of sync with subjects");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir / "img", ec);
  std::filesystem::create_directories(dir / "ref", ec);
  bool any_pred = false;
  for (const auto& s : cohort.subjects) any_pred |= s.prediction.has_value();
  if (any_pred) std::filesystem::create_directories(dir / "pred", ec);

  json subjects = json::array();
  for (std::size_t i = 0; i < cohort.subjects.size(); ++i) {
    const auto& s = cohort.subjects[i];
    const std::string file = subject_file_name(s, format);
    save_volume(s.image, dir / "img" / file);
    save_volume(s.reference, dir / "ref" / file);
    json row;
    row["id"] = s.id;
    row["group"] = std::string(to_string(s.group));
    row["split"] = std::string(to_string(cohort.splits[i]));
    row["native_voxel_size_mm"] = s.native_voxel_size_mm;
    row["analytic_volume_mm3"] = s.analytic_volume_mm3;
    row["image"] = "img/" + file;
    row["reference"] = "ref/" + file;
    if (s.prediction) {
      save_volume(*s.prediction, dir / "pred" / file);
      row["prediction"] = "pred/" + file;
    } else {
      row["prediction"] = nullptr;
    }
    subjects.push_back(std::move(row));
  }

  json manifest;
  manifest["format"] = "segaudit-cohort";
  manifest["version"] = 1;
  json labels = json::object();  // union of the reference label tables
  for (const auto& s : cohort.subjects) {
    for (const auto& [id, name] : s.reference.table().entries()) {
      if (id != 0) labels[std::to_string(id)] = name;
    }
  }
  manifest["labels"] = std::move(labels);
  manifest["subjects"] = std::move(subjects);

  const auto path = dir / "manifest.json";
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error("cannot open file for writing: " + path.string());
  f << manifest.dump(2) << "\n";
  f.flush();
  if (!f) throw io_error("failed to write file: " + path.string());
  return path;
}

std::vector<ManifestEntry> read_cohort_manifest(
    const std::filesystem::path& manifest) {
  std::ifstream f(manifest, std::ios::binary);
  if (!f) throw io_error("cannot open file: " + manifest.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw io_error("cohort manifest: malformed JSON in " + manifest.string() +
                   ": " + e.what());
  }
  std::vector<ManifestEntry> out;
  try {
    if (j.at("format").get<std::string>() != "segaudit-cohort") {
      throw io_error("cohort manifest: unexpected format field in " +
                     manifest.string());
    }
    for (const auto& row : j.at("subjects")) {
      ManifestEntry e;
      e.id = row.at("id").get<std::string>();
      e.group = row.at("group").get<std::string>();
      e.split = row.at("split").get<std::string>();
      e.native_voxel_size_mm = row.at("native_voxel_size_mm").get<double>();
      e.analytic_volume_mm3 = row.value("analytic_volume_mm3", 0.0);
      e.image = row.at("image").get<std::string>();
      e.reference = row.at("reference").get<std::string>();
      if (row.contains("prediction") && !row.at("prediction").is_null()) {
        e.prediction = row.at("prediction").get<std::string>();
      }
      out.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw io_error("cohort manifest: invalid structure in " + manifest.string() +
                   ": " + e.what());
  }
  return out;
}

namespace {

/// Label names recorded in the manifest, if any.
LabelTable manifest_label_table(const std::filesystem::path& manifest) {
  std::ifstream f(manifest, std::ios::binary);
  if (!f) throw io_error("cannot open file: " + manifest.string());
  LabelTable table;
  try {
    json j;
    f >> j;
    if (j.contains("labels")) {
      for (const auto& [key, name] : j.at("labels").items()) {
        table.add(std::stoi(key), name.get<std::string>());
      }
    }
  } catch (const std::exception& e) {
    throw io_error("cohort manifest: invalid labels block in " +
                   manifest.string() + ": " + e.what());
  }
  return table;
}

/// Rebuild a loaded map with the manifest's label names (ids the manifest
/// does not know keep their auto-generated names).
LabelMap with_names(LabelMap m, const LabelTable& names) {
  LabelTable table = names;
  for (auto id : m.present_labels()) {
    if (id != 0 && !table.contains(id)) table.add(id, m.table().name(id));
  }
  std::vector<std::int32_t> labels(m.labels().begin(), m.labels().end());
  return LabelMap(m.geometry(), std::move(labels), std::move(table));
}

}  // namespace

Cohort load_cohort(const std::filesystem::path& manifest) {
  const auto entries = read_cohort_manifest(manifest);
  const auto names = manifest_label_table(manifest);
  const auto base = manifest.parent_path();
  Cohort cohort;
  for (const auto& e : entries) {
    Subject s{.id = e.id,
              .group = e.group == "H" ? Group::H : Group::L,
              .image = load_intensity(base / e.image),
              .reference = with_names(load_labels(base / e.reference), names),
              .prediction = std::nullopt,
              .native_voxel_size_mm = e.native_voxel_size_mm,
              .analytic_volume_mm3 = e.analytic_volume_mm3};
    if (e.prediction) {
      s.prediction = with_names(load_labels(base / *e.prediction), names);
    }
    cohort.subjects.push_back(std::move(s));
    if (e.split == "train") cohort.splits.push_back(Split::train);
    else if (e.split == "val") cohort.splits.push_back(Split::val);
    else if (e.split == "test") cohort.splits.push_back(Split::test);
    else throw io_error("cohort manifest: unknown split '" + e.split + "'");
  }
  return cohort;
}

}  // namespace segaudit
