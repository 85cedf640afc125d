#include "segaudit/errorsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "segaudit/error.hpp"
#include "segaudit/metrics.hpp"
#include "segaudit/resample.hpp"
#include "segaudit/rng.hpp"

namespace segaudit {

namespace {

constexpr std::uint64_t kKindSalt[3] = {0x72616e646f6dull,   // "random"
                                        0x64696c617465ull,   // "dilate"
                                        0x65726f6465ull};    // "erode"

struct Boundaries {
  std::vector<std::int64_t> inner;  // foreground voxels with a non-fg neighbor
  std::vector<std::int64_t> outer;  // non-foreground voxels with a fg neighbor
};

/// Face-connected boundaries (6 in 3D, 4 in 2D) against in-bounds neighbors,
/// in ascending linear-index order.
Boundaries boundaries_for(std::span<const std::int32_t> labels,
                          const VoxelGeometry& g, std::int32_t label) {
  Boundaries b;
  const std::int64_t nx = g.dim(0), ny = g.dim(1), nz = g.dim(2);
  const std::int64_t stride[3] = {ny * nz, nz, 1};
  std::int64_t i = 0;
  for (std::int64_t x = 0; x < nx; ++x) {
    for (std::int64_t y = 0; y < ny; ++y) {
      for (std::int64_t z = 0; z < nz; ++z, ++i) {
        const bool fg = labels[static_cast<std::size_t>(i)] == label;
        const std::int64_t coord[3] = {x, y, z};
        const std::int64_t limit[3] = {nx, ny, nz};
        bool touches = false;
        for (int a = 0; a < g.ndim() && !touches; ++a) {
          if (coord[a] > 0 &&
              (labels[static_cast<std::size_t>(i - stride[a])] == label) != fg) {
            touches = true;
          }
          if (coord[a] + 1 < limit[a] &&
              (labels[static_cast<std::size_t>(i + stride[a])] == label) != fg) {
            touches = true;
          }
        }
        if (touches) (fg ? b.inner : b.outer).push_back(i);
      }
    }
  }
  return b;
}

/// Draw k distinct entries from `pool` (partial Fisher-Yates on a copy).
std::vector<std::int64_t> sample_without_replacement(
    const std::vector<std::int64_t>& pool, std::int64_t k, std::mt19937_64& rng) {
  std::vector<std::int64_t> copy = pool;
  std::vector<std::int64_t> picked;
  picked.reserve(static_cast<std::size_t>(k));
  const auto n = static_cast<std::int64_t>(copy.size());
  for (std::int64_t i = 0; i < k; ++i) {
    const auto j = static_cast<std::int64_t>(
        bounded_uniform(rng, static_cast<std::uint64_t>(n - i)));
    std::swap(copy[static_cast<std::size_t>(i)],
              copy[static_cast<std::size_t>(i + j)]);
    picked.push_back(copy[static_cast<std::size_t>(i)]);
  }
  return picked;
}

void apply_one_label(std::vector<std::int32_t>& labels, const VoxelGeometry& g,
                     std::int32_t label, const ErrorModel& model,
                     std::mt19937_64& rng) {
  const Boundaries b = boundaries_for(labels, g, label);
  const double p = model.strength;
  switch (model.kind) {
    case ErrorKind::random_balanced: {
      const auto m = static_cast<std::int64_t>(
          std::min(b.inner.size(), b.outer.size()));
      const std::int64_t k = binomial_draw(rng, m, p);
      for (auto idx : sample_without_replacement(b.inner, k, rng)) {
        labels[static_cast<std::size_t>(idx)] = 0;
      }
      for (auto idx : sample_without_replacement(b.outer, k, rng)) {
        labels[static_cast<std::size_t>(idx)] = label;
      }
      break;
    }
    case ErrorKind::systematic_dilate: {
      for (auto idx : b.outer) {
        if (unit_uniform(rng) < p) labels[static_cast<std::size_t>(idx)] = label;
      }
      break;
    }
    case ErrorKind::systematic_erode: {
      for (auto idx : b.inner) {
        if (unit_uniform(rng) < p) labels[static_cast<std::size_t>(idx)] = 0;
      }
      break;
    }
  }
}

std::int32_t single_foreground_label(const LabelMap& m, const char* op) {
  const auto present = m.present_labels();
  std::vector<std::int32_t> fg;
  for (auto v : present) {
    if (v != 0) fg.push_back(v);
  }
  if (fg.empty()) {
    throw validation_error(std::string(op) + ": empty foreground");
  }
  if (fg.size() > 1) {
    throw validation_error(std::string(op) + ": expected a single foreground label");
  }
  return fg.front();
}

double total_foreground_volume(const LabelMap& m) {
  const std::int64_t fg = m.geometry().voxel_count() - m.count(0);
  return static_cast<double>(fg) * m.geometry().voxel_volume();
}

}  // namespace

std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::random_balanced: return "random-balanced";
    case ErrorKind::systematic_dilate: return "systematic-dilate";
    case ErrorKind::systematic_erode: return "systematic-erode";
  }
  throw validation_error("unknown error kind");
}

ErrorKind error_kind_from_string(std::string_view s) {
  if (s == "random-balanced") return ErrorKind::random_balanced;
  if (s == "systematic-dilate") return ErrorKind::systematic_dilate;
  if (s == "systematic-erode") return ErrorKind::systematic_erode;
  throw validation_error("unknown error kind: " + std::string(s));
}

LabelMap perturb(const LabelMap& m, const ErrorModel& model) {
  if (!(model.strength >= 0.0 && model.strength <= 1.0)) {
    throw validation_error("perturb: strength must be in [0, 1]");
  }
  std::vector<std::int32_t> fg_labels;
  for (auto v : m.present_labels()) {
    if (v != 0) fg_labels.push_back(v);
  }
  if (fg_labels.empty()) throw validation_error("perturb: empty foreground");

  std::vector<std::int32_t> out(m.labels().begin(), m.labels().end());
  std::mt19937_64 rng(model.seed);
  for (std::int32_t label : fg_labels) {
    // a label can vanish while an earlier one dilates over it
    if (std::find(out.begin(), out.end(), label) == out.end()) continue;
    apply_one_label(out, m.geometry(), label, model, rng);
  }
  return LabelMap(m.geometry(), std::move(out), m.table());
}

std::vector<std::pair<double, double>> downsampling_bias_curve(
    const LabelMap& m, std::span<const double> resolutions_mm) {
  if (resolutions_mm.empty()) {
    throw validation_error("downsampling_bias_curve: empty resolution list");
  }
  double native_max = 0.0;
  for (int a = 0; a < m.geometry().ndim(); ++a) {
    native_max = std::max(native_max, m.geometry().voxel_size(a));
  }
  std::vector<std::pair<double, double>> out;
  for (double res : resolutions_mm) {
    if (!(res > 0.0) || res < native_max - 1e-9) {
      std::ostringstream os;
      os << "downsampling_bias_curve: resolution " << res
         << " finer than native voxel size " << native_max;
      throw validation_error(os.str());
    }
    const auto& g = m.geometry();
    std::vector<std::int64_t> dims;
    std::vector<double> sizes;
    for (int a = 0; a < g.ndim(); ++a) {
      dims.push_back(std::max<std::int64_t>(
          1, std::llround(static_cast<double>(g.dim(a)) * g.voxel_size(a) / res)));
      sizes.push_back(res);
    }
    const auto target = VoxelGeometry::make(dims, sizes);
    if (target == g) {
      out.emplace_back(res, total_foreground_volume(m));
    } else {
      out.emplace_back(res, total_foreground_volume(resample_labels_majority(m, target)));
    }
  }
  return out;
}

double calibrate_strength(const LabelMap& m, ErrorKind kind, double target_bias,
                          std::uint64_t seed) {
  if (kind == ErrorKind::random_balanced) {
    throw validation_error(
        "calibrate_strength: random-balanced errors have zero volume bias");
  }
  if (kind == ErrorKind::systematic_dilate && !(target_bias > 0.0)) {
    throw validation_error("calibrate_strength: dilation needs a positive target");
  }
  if (kind == ErrorKind::systematic_erode && !(target_bias < 0.0)) {
    throw validation_error("calibrate_strength: erosion needs a negative target");
  }
  const std::int32_t label = single_foreground_label(m, "calibrate_strength");
  const Boundaries b = boundaries_for(m.labels(), m.geometry(), label);
  const auto& pool = kind == ErrorKind::systematic_dilate ? b.outer : b.inner;
  const double volume = static_cast<double>(m.count(label));

  // perturb() draws one uniform per boundary voxel in order, so the realized
  // change count at strength p is exactly #{u_i < p}; place p between order
  // statistics to hit the closest achievable count.
  std::mt19937_64 rng(seed);
  std::vector<double> u(pool.size());
  for (auto& v : u) v = unit_uniform(rng);
  std::sort(u.begin(), u.end());

  const auto m_count = static_cast<std::int64_t>(u.size());
  const std::int64_t want = std::clamp<std::int64_t>(
      std::llround(std::abs(target_bias) * volume), 0, m_count);
  if (want == 0) return 0.0;
  const double below = u[static_cast<std::size_t>(want - 1)];
  const double above = want < m_count ? u[static_cast<std::size_t>(want)] : 1.0;
  return 0.5 * (below + above);
}

std::uint64_t subject_error_seed(std::uint64_t base, ErrorKind kind,
                                 std::size_t subject_index) {
  return mix_seed(mix_seed(base, kKindSalt[static_cast<int>(kind)]), subject_index);
}

Fig1Calibration calibrate_fig1_pair(std::span<const LabelMap> references,
                                    std::uint64_t seed, double bias_target) {
  if (references.empty()) {
    throw validation_error("calibrate_fig1_pair: empty cohort");
  }
  if (!(bias_target > 0.0)) {
    throw validation_error("calibrate_fig1_pair: bias target must be positive");
  }

  struct SubjectState {
    double volume = 0.0;
    std::vector<double> u_dilate;  // sorted
    std::vector<double> u_random;  // sorted
  };
  std::vector<SubjectState> st(references.size());
  for (std::size_t i = 0; i < references.size(); ++i) {
    const auto& m = references[i];
    const std::int32_t label = single_foreground_label(m, "calibrate_fig1_pair");
    const Boundaries b = boundaries_for(m.labels(), m.geometry(), label);
    st[i].volume = static_cast<double>(m.count(label));

    std::mt19937_64 rng_d(
        subject_error_seed(seed, ErrorKind::systematic_dilate, i));
    st[i].u_dilate.resize(b.outer.size());
    for (auto& v : st[i].u_dilate) v = unit_uniform(rng_d);
    std::sort(st[i].u_dilate.begin(), st[i].u_dilate.end());

    std::mt19937_64 rng_r(subject_error_seed(seed, ErrorKind::random_balanced, i));
    st[i].u_random.resize(std::min(b.inner.size(), b.outer.size()));
    for (auto& v : st[i].u_random) v = unit_uniform(rng_r);
    std::sort(st[i].u_random.begin(), st[i].u_random.end());
  }

  auto count_below = [](const std::vector<double>& u, double p) {
    return static_cast<double>(
        std::lower_bound(u.begin(), u.end(), p) - u.begin());
  };
  auto median_dilate_bias = [&](double p) {
    std::vector<double> biases;
    biases.reserve(st.size());
    for (const auto& s : st) biases.push_back(count_below(s.u_dilate, p) / s.volume);
    return median(biases);
  };
  auto mean_dilate_dsc = [&](double p) {
    double acc = 0.0;
    for (const auto& s : st) {
      acc += 2.0 * s.volume / (2.0 * s.volume + count_below(s.u_dilate, p));
    }
    return acc / static_cast<double>(st.size());
  };
  auto mean_random_dsc = [&](double p) {
    double acc = 0.0;
    for (const auto& s : st) {
      acc += (s.volume - count_below(s.u_random, p)) / s.volume;
    }
    return acc / static_cast<double>(st.size());
  };

  // Smallest p whose cohort median bias reaches the target.
  double p_dilate = 1.0;
  if (median_dilate_bias(1.0) >= bias_target) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (median_dilate_bias(mid) >= bias_target ? hi : lo) = mid;
    }
    p_dilate = hi;
  }

  // Match the random model's mean Dice to the dilated one.
  const double dsc_goal = mean_dilate_dsc(p_dilate);
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_random_dsc(mid) > dsc_goal ? lo : hi) = mid;
  }
  const double p_random = 0.5 * (lo + hi);

  // Report numbers from real perturbations (identical by construction).
  Fig1Calibration cal;
  cal.p_random = p_random;
  cal.p_dilate = p_dilate;
  std::vector<double> bias_r, bias_d, dsc_r, dsc_d;
  for (std::size_t i = 0; i < references.size(); ++i) {
    const auto& ref = references[i];
    const std::int32_t label = single_foreground_label(ref, "calibrate_fig1_pair");
    const LabelMap rnd = perturb(
        ref, {ErrorKind::random_balanced, p_random,
              subject_error_seed(seed, ErrorKind::random_balanced, i)});
    const LabelMap dil = perturb(
        ref, {ErrorKind::systematic_dilate, p_dilate,
              subject_error_seed(seed, ErrorKind::systematic_dilate, i)});
    dsc_r.push_back(dsc(rnd, ref, label));
    dsc_d.push_back(dsc(dil, ref, label));
    bias_r.push_back(volume_bias(rnd, ref, label));
    bias_d.push_back(volume_bias(dil, ref, label));
  }
  cal.mean_dsc_random = std::accumulate(dsc_r.begin(), dsc_r.end(), 0.0) /
                        static_cast<double>(dsc_r.size());
  cal.mean_dsc_dilate = std::accumulate(dsc_d.begin(), dsc_d.end(), 0.0) /
                        static_cast<double>(dsc_d.size());
  cal.median_bias_random = median(bias_r);
  cal.median_bias_dilate = median(bias_d);
  return cal;
}

}  // namespace segaudit
