#pragma once

// Test-only oracles. Each one recomputes a quantity by brute force over the
// problem definition, independent of the library code paths it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "segaudit/volume.hpp"

namespace testsupport {

/// Physical volume by direct voxel counting.
inline double volume_oracle(const segaudit::LabelMap& m, std::int32_t label) {
  std::int64_t count = 0;
  for (auto v : m.labels()) count += v == label;
  return static_cast<double>(count) * m.geometry().voxel_volume();
}

/// Dice by explicit set counting.
inline double dsc_oracle(const segaudit::LabelMap& a, const segaudit::LabelMap& b,
                         std::int32_t label) {
  std::int64_t na = 0, nb = 0, ni = 0;
  for (std::size_t i = 0; i < a.labels().size(); ++i) {
    const bool ia = a.labels()[i] == label;
    const bool ib = b.labels()[i] == label;
    na += ia;
    nb += ib;
    ni += ia && ib;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(ni) / static_cast<double>(na + nb);
}

/// Volume bias straight from the definition, via the counting oracle.
inline double volume_bias_oracle(const segaudit::LabelMap& pred,
                                 const segaudit::LabelMap& ref,
                                 std::int32_t label) {
  const double vp = volume_oracle(pred, label);
  const double vr = volume_oracle(ref, label);
  return (vp - vr) / vr;
}

/// Majority-vote pooling by scanning every source voxel and testing its
/// physical center against the target voxel footprint. Ties: lowest label id.
/// Empty footprints: nearest source center per axis, the larger index on a
/// distance tie.
inline segaudit::LabelMap majority_oracle(const segaudit::LabelMap& src,
                                          const segaudit::VoxelGeometry& target) {
  const auto& g = src.geometry();
  std::vector<std::int32_t> out(static_cast<std::size_t>(target.voxel_count()));
  std::size_t dst = 0;
  for (std::int64_t jx = 0; jx < target.dim(0); ++jx) {
    for (std::int64_t jy = 0; jy < target.dim(1); ++jy) {
      for (std::int64_t jz = 0; jz < target.dim(2); ++jz, ++dst) {
        const std::int64_t j[3] = {jx, jy, jz};
        std::map<std::int32_t, std::int64_t> hist;
        for (std::int64_t x = 0; x < g.dim(0); ++x) {
          for (std::int64_t y = 0; y < g.dim(1); ++y) {
            for (std::int64_t z = 0; z < g.dim(2); ++z) {
              const std::int64_t i[3] = {x, y, z};
              bool inside = true;
              for (int a = 0; a < 3 && inside; ++a) {
                const double center = (static_cast<double>(i[a]) + 0.5) * g.voxel_size(a);
                const double lo = static_cast<double>(j[a]) * target.voxel_size(a);
                const double hi = static_cast<double>(j[a] + 1) * target.voxel_size(a);
                inside = center >= lo && center < hi;
              }
              if (inside) ++hist[src.at(x, y, z)];
            }
          }
        }
        if (hist.empty()) {
          std::int64_t n[3];
          for (int a = 0; a < 3; ++a) {
            const double tc = (static_cast<double>(j[a]) + 0.5) * target.voxel_size(a);
            std::int64_t best = 0;
            double best_d = std::abs((0.5) * g.voxel_size(a) - tc);
            for (std::int64_t i = 1; i < g.dim(a); ++i) {
              const double d =
                  std::abs((static_cast<double>(i) + 0.5) * g.voxel_size(a) - tc);
              if (d < best_d || d == best_d) {  // tie -> larger index
                best_d = d;
                best = i;
              }
            }
            n[a] = best;
          }
          out[dst] = src.at(n[0], n[1], n[2]);
          continue;
        }
        std::int32_t best_label = hist.begin()->first;
        std::int64_t best_count = hist.begin()->second;
        for (const auto& [lab, cnt] : hist) {  // ascending ids: > keeps lowest
          if (cnt > best_count) {
            best_label = lab;
            best_count = cnt;
          }
        }
        out[dst] = best_label;
      }
    }
  }
  return segaudit::LabelMap(target, std::move(out), src.table());
}

/// One-step face-connected (6/4) dilation of one label, in-bounds neighbors.
inline std::vector<std::int32_t> dilate_oracle(const segaudit::LabelMap& m,
                                               std::int32_t label) {
  const auto& g = m.geometry();
  std::vector<std::int32_t> out(m.labels().begin(), m.labels().end());
  for (std::int64_t x = 0; x < g.dim(0); ++x) {
    for (std::int64_t y = 0; y < g.dim(1); ++y) {
      for (std::int64_t z = 0; z < g.dim(2); ++z) {
        if (m.at(x, y, z) == label) continue;
        const std::int64_t c[3] = {x, y, z};
        bool touches = false;
        for (int a = 0; a < g.ndim() && !touches; ++a) {
          std::int64_t n[3] = {x, y, z};
          n[a] = c[a] - 1;
          if (n[a] >= 0 && m.at(n[0], n[1], n[2]) == label) touches = true;
          n[a] = c[a] + 1;
          if (n[a] < g.dim(a) && m.at(n[0], n[1], n[2]) == label) touches = true;
        }
        if (touches) out[static_cast<std::size_t>(m.index(x, y, z))] = label;
      }
    }
  }
  return out;
}

/// AUC by exhaustive pairwise comparison, ties counted 1/2.
inline double auc_oracle(std::span<const std::pair<double, bool>> values) {
  double wins = 0.0;
  std::int64_t pairs = 0;
  for (const auto& [vp, p] : values) {
    if (!p) continue;
    for (const auto& [vn, n] : values) {
      if (n) continue;
      ++pairs;
      if (vp > vn) wins += 1.0;
      else if (vp == vn) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

/// Median by full sort, mean of the central pair when even.
inline double median_oracle(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Multilinear function in continuous source-index coordinates plus the
/// center-aligned target-to-source mapping it should survive resampling with.
struct Multilinear {
  double c0, cx, cy, cz, cxy, cxz, cyz, cxyz;
  double operator()(double x, double y, double z) const {
    return c0 + cx * x + cy * y + cz * z + cxy * x * y + cxz * x * z +
           cyz * y * z + cxyz * x * y * z;
  }
};

inline double source_coordinate(std::int64_t j, double tgt_mm, double src_mm) {
  return (static_cast<double>(j) + 0.5) * (tgt_mm / src_mm) - 0.5;
}

}  // namespace testsupport
