#include "segaudit/resample.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "segaudit/error.hpp"
#include "segaudit/rng.hpp"

namespace segaudit {

namespace {

std::int64_t round_half_away(double v) { return std::llround(v); }

// Linear interpolation in the a + t*(b - a) form: exact for a == b and
// clamped so accumulated rounding can never push a value outside [a, b].
double lerp(double a, double b, double t) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  return std::clamp(a + t * (b - a), lo, hi);
}

struct AxisSamples {
  std::vector<std::int64_t> i0;
  std::vector<std::int64_t> i1;
  std::vector<double> frac;
};

// Target voxel centers mapped into continuous source indices with
// clamp-to-edge handling. Centers sit at (i + 0.5) * voxel_size and both
// fields of view share the origin corner.
AxisSamples linear_axis_samples(std::int64_t n_src, double src_mm,
                                std::int64_t n_tgt, double tgt_mm) {
  AxisSamples s;
  s.i0.resize(static_cast<std::size_t>(n_tgt));
  s.i1.resize(static_cast<std::size_t>(n_tgt));
  s.frac.resize(static_cast<std::size_t>(n_tgt));
  const double ratio = tgt_mm / src_mm;
  for (std::int64_t j = 0; j < n_tgt; ++j) {
    const double u = (static_cast<double>(j) + 0.5) * ratio - 0.5;
    double base = std::floor(u);
    double t = u - base;
    std::int64_t i0 = static_cast<std::int64_t>(base);
    std::int64_t i1 = i0 + 1;
    if (i0 < 0) {
      i0 = 0;
      i1 = 0;
      t = 0.0;
    } else if (i1 > n_src - 1) {
      i1 = n_src - 1;
      if (i0 > n_src - 1) i0 = n_src - 1;
      if (i0 == i1) t = 0.0;
    }
    s.i0[static_cast<std::size_t>(j)] = i0;
    s.i1[static_cast<std::size_t>(j)] = i1;
    s.frac[static_cast<std::size_t>(j)] = t;
  }
  return s;
}

struct AxisFootprint {
  std::vector<std::int64_t> lo;       // first source index in footprint
  std::vector<std::int64_t> hi;       // last source index (lo > hi: empty)
  std::vector<std::int64_t> nearest;  // fallback for empty footprints
};

// Source voxels whose centers fall in [j*tgt_mm, (j+1)*tgt_mm):
// i in [ceil(j*r - 0.5), ceil((j+1)*r - 0.5) - 1] with r = tgt_mm / src_mm,
// intersected with the valid index range.
AxisFootprint footprint_axis(std::int64_t n_src, double src_mm,
                             std::int64_t n_tgt, double tgt_mm) {
  AxisFootprint f;
  f.lo.resize(static_cast<std::size_t>(n_tgt));
  f.hi.resize(static_cast<std::size_t>(n_tgt));
  f.nearest.resize(static_cast<std::size_t>(n_tgt));
  const double ratio = tgt_mm / src_mm;
  for (std::int64_t j = 0; j < n_tgt; ++j) {
    const double lo_real = static_cast<double>(j) * ratio - 0.5;
    const double hi_real = static_cast<double>(j + 1) * ratio - 0.5;
    std::int64_t lo = static_cast<std::int64_t>(std::ceil(lo_real));
    std::int64_t hi = static_cast<std::int64_t>(std::ceil(hi_real)) - 1;
    lo = std::max<std::int64_t>(lo, 0);
    hi = std::min<std::int64_t>(hi, n_src - 1);
    f.lo[static_cast<std::size_t>(j)] = lo;
    f.hi[static_cast<std::size_t>(j)] = hi;
    const double u = (static_cast<double>(j) + 0.5) * ratio - 0.5;
    f.nearest[static_cast<std::size_t>(j)] =
        std::clamp<std::int64_t>(round_half_away(u), 0, n_src - 1);
  }
  return f;
}

void check_same_rank(const VoxelGeometry& a, const VoxelGeometry& b,
                     const char* op) {
  if (a.ndim() != b.ndim()) {
    std::ostringstream os;
    os << op << ": source is " << a.ndim() << "D but target is " << b.ndim() << "D";
    throw validation_error(os.str());
  }
}

}  // namespace

ScaleFactor ScaleFactor::isotropic(double f) {
  const double c[3] = {f, f, f};
  return make(c);
}

ScaleFactor ScaleFactor::make(std::span<const double> components,
                              double min_bound, double max_bound) {
  if (components.empty() || components.size() > 3) {
    throw validation_error("scale factor: expected 1 to 3 components");
  }
  ScaleFactor f;
  for (std::size_t a = 0; a < 3; ++a) {
    const double v = a < components.size() ? components[a] : components.back();
    if (!std::isfinite(v) || v < min_bound || v > max_bound) {
      std::ostringstream os;
      os << "scale factor component " << v << " outside [" << min_bound << ", "
         << max_bound << "]";
      throw validation_error(os.str());
    }
    f.f_[a] = v;
  }
  return f;
}

VoxelGeometry scaled_geometry(const VoxelGeometry& source, const ScaleFactor& f) {
  std::vector<std::int64_t> dims;
  std::vector<double> sizes;
  for (int a = 0; a < source.ndim(); ++a) {
    const double factor = f.component(a);
    dims.push_back(std::max<std::int64_t>(
        1, round_half_away(static_cast<double>(source.dim(a)) * factor)));
    sizes.push_back(source.voxel_size(a) / factor);
  }
  return VoxelGeometry::make(dims, sizes);
}

VoxelGrid resample_intensity(const VoxelGrid& grid, const VoxelGeometry& target) {
  const VoxelGeometry& src = grid.geometry();
  check_same_rank(src, target, "resample_intensity");
  if (target == src) return grid;  // factor 1 stays bit-exact

  AxisSamples ax[3];
  for (int a = 0; a < 3; ++a) {
    ax[a] = linear_axis_samples(src.dim(a), src.voxel_size(a), target.dim(a),
                                target.voxel_size(a));
  }

  const std::int64_t sy = src.dim(1), sz = src.dim(2);
  const std::size_t src_plane = static_cast<std::size_t>(src.voxel_count());
  const std::size_t tgt_plane = static_cast<std::size_t>(target.voxel_count());
  std::vector<double> out(tgt_plane * static_cast<std::size_t>(grid.channels()));

  const std::span<const double> in = grid.data();
  for (int c = 0; c < grid.channels(); ++c) {
    const std::size_t in_base = static_cast<std::size_t>(c) * src_plane;
    std::size_t dst = static_cast<std::size_t>(c) * tgt_plane;
    for (std::int64_t x = 0; x < target.dim(0); ++x) {
      const auto x0 = ax[0].i0[static_cast<std::size_t>(x)];
      const auto x1 = ax[0].i1[static_cast<std::size_t>(x)];
      const double tx = ax[0].frac[static_cast<std::size_t>(x)];
      for (std::int64_t y = 0; y < target.dim(1); ++y) {
        const auto y0 = ax[1].i0[static_cast<std::size_t>(y)];
        const auto y1 = ax[1].i1[static_cast<std::size_t>(y)];
        const double ty = ax[1].frac[static_cast<std::size_t>(y)];
        for (std::int64_t z = 0; z < target.dim(2); ++z, ++dst) {
          const auto z0 = ax[2].i0[static_cast<std::size_t>(z)];
          const auto z1 = ax[2].i1[static_cast<std::size_t>(z)];
          const double tz = ax[2].frac[static_cast<std::size_t>(z)];
          auto fetch = [&](std::int64_t xi, std::int64_t yi, std::int64_t zi) {
            return in[in_base + static_cast<std::size_t>((xi * sy + yi) * sz + zi)];
          };
          const double c00 = lerp(fetch(x0, y0, z0), fetch(x0, y0, z1), tz);
          const double c01 = lerp(fetch(x0, y1, z0), fetch(x0, y1, z1), tz);
          const double c10 = lerp(fetch(x1, y0, z0), fetch(x1, y0, z1), tz);
          const double c11 = lerp(fetch(x1, y1, z0), fetch(x1, y1, z1), tz);
          out[dst] = lerp(lerp(c00, c01, ty), lerp(c10, c11, ty), tx);
        }
      }
    }
  }
  return VoxelGrid(target, std::move(out), grid.channels());
}

VoxelGrid resample_intensity(const VoxelGrid& grid, const ScaleFactor& factor) {
  return resample_intensity(grid, scaled_geometry(grid.geometry(), factor));
}

LabelMap resample_labels_majority(const LabelMap& m, const VoxelGeometry& target) {
  const VoxelGeometry& src = m.geometry();
  check_same_rank(src, target, "resample_labels_majority");
  if (target == src) return m;

  AxisFootprint ax[3];
  for (int a = 0; a < 3; ++a) {
    ax[a] = footprint_axis(src.dim(a), src.voxel_size(a), target.dim(a),
                           target.voxel_size(a));
  }

  const std::int64_t sy = src.dim(1), sz = src.dim(2);
  const std::span<const std::int32_t> in = m.labels();
  std::vector<std::int32_t> out(static_cast<std::size_t>(target.voxel_count()));

  std::vector<std::pair<std::int32_t, std::int64_t>> hist;
  std::size_t dst = 0;
  for (std::int64_t x = 0; x < target.dim(0); ++x) {
    for (std::int64_t y = 0; y < target.dim(1); ++y) {
      for (std::int64_t z = 0; z < target.dim(2); ++z, ++dst) {
        const std::int64_t j[3] = {x, y, z};
        bool empty = false;
        for (int a = 0; a < 3; ++a) {
          if (ax[a].lo[static_cast<std::size_t>(j[a])] >
              ax[a].hi[static_cast<std::size_t>(j[a])]) {
            empty = true;
            break;
          }
        }
        if (empty) {
          const std::int64_t nx = ax[0].nearest[static_cast<std::size_t>(x)];
          const std::int64_t ny = ax[1].nearest[static_cast<std::size_t>(y)];
          const std::int64_t nz = ax[2].nearest[static_cast<std::size_t>(z)];
          out[dst] = in[static_cast<std::size_t>((nx * sy + ny) * sz + nz)];
          continue;
        }
        hist.clear();
        for (std::int64_t xi = ax[0].lo[static_cast<std::size_t>(x)];
             xi <= ax[0].hi[static_cast<std::size_t>(x)]; ++xi) {
          for (std::int64_t yi = ax[1].lo[static_cast<std::size_t>(y)];
               yi <= ax[1].hi[static_cast<std::size_t>(y)]; ++yi) {
            for (std::int64_t zi = ax[2].lo[static_cast<std::size_t>(z)];
                 zi <= ax[2].hi[static_cast<std::size_t>(z)]; ++zi) {
              const std::int32_t v =
                  in[static_cast<std::size_t>((xi * sy + yi) * sz + zi)];
              bool found = false;
              for (auto& [lab, cnt] : hist) {
                if (lab == v) {
                  ++cnt;
                  found = true;
                  break;
                }
              }
              if (!found) hist.emplace_back(v, 1);
            }
          }
        }
        std::int32_t best = hist.front().first;
        std::int64_t best_count = hist.front().second;
        for (const auto& [lab, cnt] : hist) {
          if (cnt > best_count || (cnt == best_count && lab < best)) {
            best = lab;
            best_count = cnt;
          }
        }
        out[dst] = best;
      }
    }
  }
  return LabelMap(target, std::move(out), m.table());
}

LabelMap resample_labels_majority(const LabelMap& m, const ScaleFactor& factor) {
  return resample_labels_majority(m, scaled_geometry(m.geometry(), factor));
}

VoxelGrid vinn_rescale(const VoxelGrid& features, const ScaleFactor& factor) {
  return resample_intensity(features, scaled_geometry(features.geometry(), factor));
}

ScaleFactor sample_scale_factor(const AugmentationPolicy& policy,
                                std::uint64_t seed) {
  if (!(policy.min_factor > 0.0) || !(policy.min_factor <= policy.max_factor)) {
    throw validation_error("augmentation policy: need 0 < min_factor <= max_factor");
  }
  if (policy.min_factor < ScaleFactor::kMinFactor ||
      policy.max_factor > ScaleFactor::kMaxFactor) {
    throw validation_error("augmentation policy: range exceeds scale factor bounds");
  }
  if (policy.min_factor == policy.max_factor) {
    return ScaleFactor::isotropic(policy.min_factor);
  }
  std::mt19937_64 rng(seed);
  const double lo = std::log(policy.min_factor);
  const double hi = std::log(policy.max_factor);
  auto draw = [&]() { return std::exp(lo + unit_uniform(rng) * (hi - lo)); };
  if (policy.isotropic) return ScaleFactor::isotropic(draw());
  const double c[3] = {draw(), draw(), draw()};
  return ScaleFactor::make(c);
}

std::pair<VoxelGrid, LabelMap> apply_scale_augmentation(const VoxelGrid& image,
                                                        const LabelMap& labels,
                                                        const ScaleFactor& factor) {
  if (image.geometry() != labels.geometry()) {
    throw validation_error(
        "apply_scale_augmentation: image and labels must share a geometry");
  }
  const VoxelGeometry target = scaled_geometry(image.geometry(), factor);
  return {resample_intensity(image, target),
          resample_labels_majority(labels, target)};
}

}  // namespace segaudit
