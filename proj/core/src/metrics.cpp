#include "segaudit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "segaudit/error.hpp"

namespace segaudit {

namespace {

std::vector<double> sorted_copy(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return v;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw validation_error("quantile of an empty sample");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - std::floor(h);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Shared Freedman-Diaconis bins over the pooled sample; counts for `values`.
Histogram fd_histogram(std::span<const double> values,
                       std::span<const double> pooled) {
  const auto ps = sorted_copy(pooled);
  const double mn = ps.front();
  const double mx = ps.back();
  const double iqr = quantile_sorted(ps, 0.75) - quantile_sorted(ps, 0.25);
  const double width =
      2.0 * iqr / std::cbrt(static_cast<double>(ps.size()));

  Histogram h;
  std::int64_t nbins = 1;
  if (width > 0.0 && mx > mn) {
    nbins = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::ceil((mx - mn) / width)));
    nbins = std::min<std::int64_t>(nbins, 4096);  // degenerate-spread guard
  }
  const double span = mx > mn ? (mx - mn) : 1.0;
  const double step = span / static_cast<double>(nbins);
  h.bin_edges.resize(static_cast<std::size_t>(nbins) + 1);
  for (std::int64_t b = 0; b <= nbins; ++b) {
    h.bin_edges[static_cast<std::size_t>(b)] = mn + step * static_cast<double>(b);
  }
  h.counts.assign(static_cast<std::size_t>(nbins), 0);
  for (double v : values) {
    auto b = static_cast<std::int64_t>((v - mn) / step);
    b = std::clamp<std::int64_t>(b, 0, nbins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

}  // namespace

double median(std::span<const double> values) {
  if (values.empty()) throw validation_error("median of an empty sample");
  auto v = sorted_copy(values);
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mad(std::span<const double> values) {
  const double m = median(values);
  std::vector<double> dev(values.size());
  std::transform(values.begin(), values.end(), dev.begin(),
                 [m](double v) { return std::abs(v - m); });
  return median(dev);
}

double quantile(std::span<const double> values, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw validation_error("quantile: p outside [0, 1]");
  return quantile_sorted(sorted_copy(values), p);
}

double dsc(const LabelMap& pred, const LabelMap& ref, std::int32_t label) {
  if (pred.geometry() != ref.geometry()) {
    throw validation_error(
        "dsc: geometries differ; resample explicitly before comparing");
  }
  if (!pred.table().contains(label) && !ref.table().contains(label)) {
    throw validation_error("dsc: unknown label id " + std::to_string(label));
  }
  std::int64_t a = 0, b = 0, inter = 0;
  const auto pl = pred.labels();
  const auto rl = ref.labels();
  for (std::size_t i = 0; i < pl.size(); ++i) {
    const bool in_a = pl[i] == label;
    const bool in_b = rl[i] == label;
    a += in_a;
    b += in_b;
    inter += in_a && in_b;
  }
  if (a + b == 0) return 1.0;  // both empty: perfect agreement
  return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

double volume_bias(const LabelMap& pred, const LabelMap& ref, std::int32_t label) {
  if (!ref.table().contains(label)) {
    throw validation_error("volume_bias: unknown label id " + std::to_string(label));
  }
  const double ref_volume =
      static_cast<double>(ref.count(label)) * ref.geometry().voxel_volume();
  if (ref_volume <= 0.0) {
    throw validation_error("volume_bias: empty reference structure for label " +
                           std::to_string(label));
  }
  // Predicted side is counted directly so a prediction that misses the
  // structure entirely reads as bias -1 instead of failing.
  const double pred_volume =
      static_cast<double>(pred.count(label)) * pred.geometry().voxel_volume();
  return (pred_volume - ref_volume) / ref_volume;
}

double roc_auc(std::span<const std::pair<double, bool>> values) {
  std::vector<std::pair<double, bool>> v(values.begin(), values.end());
  std::int64_t n_pos = 0, n_neg = 0;
  for (const auto& [_, positive] : v) {
    positive ? ++n_pos : ++n_neg;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw validation_error("roc_auc: both classes must be present");
  }
  std::sort(v.begin(), v.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Rank-sum with midranks for ties: AUC = (R+ - n+(n+ + 1)/2) / (n+ n-).
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j].first == v[i].first) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (v[k].second) rank_sum_pos += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

DistributionSummary distribution_summary(std::span<const double> values,
                                         std::span<const double> other) {
  if (values.size() < 2 || other.size() < 2) {
    throw validation_error("distribution_summary: need at least 2 values per group");
  }
  DistributionSummary s;
  s.median = median(values);
  s.mad = mad(values);

  std::vector<double> pooled(values.begin(), values.end());
  pooled.insert(pooled.end(), other.begin(), other.end());
  s.histogram = fd_histogram(values, pooled);

  // Pooled MAD: absolute deviations from each group's own median, pooled.
  const double other_median = median(other);
  std::vector<double> dev;
  dev.reserve(pooled.size());
  for (double v : values) dev.push_back(std::abs(v - s.median));
  for (double v : other) dev.push_back(std::abs(v - other_median));
  const double pooled_mad = median(dev);

  const double gap = std::abs(s.median - other_median);
  if (pooled_mad > 0.0) {
    s.mode_separation = gap / pooled_mad;
  } else if (gap == 0.0) {
    s.mode_separation = 0.0;  // identical degenerate groups
  } else {
    s.mode_separation = std::numeric_limits<double>::infinity();
    s.degenerate = true;
  }
  return s;
}

GroupSummary group_bias(std::span<const SubjectMetrics> records,
                        std::string_view group) {
  std::vector<double> biases, dscs, volumes, other_volumes;
  std::int32_t label = 0;
  bool label_set = false;
  for (const auto& r : records) {
    if (!label_set) {
      label = r.label;
      label_set = true;
    } else if (r.label != label) {
      throw validation_error("group_bias: records mix label ids; aggregate per label");
    }
    if (r.group == group) {
      biases.push_back(r.volume_bias);
      dscs.push_back(r.dsc);
      volumes.push_back(r.volume_pred_mm3);
    } else {
      other_volumes.push_back(r.volume_pred_mm3);
    }
  }
  if (biases.empty()) {
    throw validation_error("group_bias: no records for group '" + std::string(group) +
                           "'");
  }

  GroupSummary g;
  g.group = std::string(group);
  g.label = label;
  g.n = static_cast<int>(biases.size());
  g.median_volume_bias = median(biases);
  g.bias_q1 = quantile(biases, 0.25);
  g.bias_q3 = quantile(biases, 0.75);
  g.dsc_mean = std::accumulate(dscs.begin(), dscs.end(), 0.0) /
               static_cast<double>(dscs.size());
  double ss = 0.0;
  for (double d : dscs) ss += (d - g.dsc_mean) * (d - g.dsc_mean);
  g.dsc_sd = dscs.size() > 1 ? std::sqrt(ss / static_cast<double>(dscs.size() - 1))
                             : 0.0;
  g.volume_median = median(volumes);
  g.volume_mad = mad(volumes);

  if (volumes.size() >= 2 && other_volumes.size() >= 2) {
    const auto s = distribution_summary(volumes, other_volumes);
    g.volume_histogram = s.histogram;
    g.mode_separation = s.mode_separation;
    g.separation_degenerate = s.degenerate;
  } else {
    std::vector<double> pooled(volumes.begin(), volumes.end());
    pooled.insert(pooled.end(), other_volumes.begin(), other_volumes.end());
    g.volume_histogram = fd_histogram(volumes, pooled);
    g.mode_separation = std::nullopt;
  }
  return g;
}

}  // namespace segaudit
