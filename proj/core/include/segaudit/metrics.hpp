#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "segaudit/volume.hpp"

namespace segaudit {

/// One evaluation record: a single (subject, label) pair.
struct SubjectMetrics {
  std::string subject_id;
  std::string group;
  std::int32_t label = 0;
  double dsc = 0.0;
  double volume_pred_mm3 = 0.0;
  double volume_ref_mm3 = 0.0;
  double volume_bias = 0.0;
};

struct Histogram {
  std::vector<double> bin_edges;        // size = counts.size() + 1
  std::vector<std::int64_t> counts;
};

/// Robust per-group aggregate for one label. The volume fields summarize the
/// predicted-volume distribution; the histogram uses Freedman-Diaconis bins
/// computed on the pooled sample (this group plus the rest of the records) so
/// group histograms share edges. mode_separation is |median_a - median_b| /
/// pooled MAD against the complement group, infinity when the pooled MAD is
/// zero but the medians differ (separation_degenerate is set), and absent
/// when either side has fewer than two records.
struct GroupSummary {
  std::string group;
  std::int32_t label = 0;
  int n = 0;
  double median_volume_bias = 0.0;
  double bias_q1 = 0.0;
  double bias_q3 = 0.0;
  double dsc_mean = 0.0;
  double dsc_sd = 0.0;
  double volume_median = 0.0;
  double volume_mad = 0.0;
  Histogram volume_histogram;
  std::optional<double> mode_separation;
  bool separation_degenerate = false;
};

/// Distribution summary of one sample against another (shared-bin histogram,
/// robust location/spread, mode-separation score).
struct DistributionSummary {
  double median = 0.0;
  double mad = 0.0;
  Histogram histogram;
  double mode_separation = 0.0;
  bool degenerate = false;
};

/// Dice similarity coefficient 2|A&B| / (|A|+|B|) for one label. Geometries
/// must match exactly; volumes at other resolutions have to be resampled
/// explicitly first. Both sets empty yields 1.0.
double dsc(const LabelMap& pred, const LabelMap& ref, std::int32_t label);

/// Normalized signed volume difference (Volume(pred) - Volume(ref)) /
/// Volume(ref); positive means oversegmentation. Physical volumes, so the
/// geometries may differ. Throws when the reference structure is empty.
double volume_bias(const LabelMap& pred, const LabelMap& ref, std::int32_t label);

/// Aggregate the records of one group (all records must share one label id;
/// records of other groups form the complement used for shared histogram
/// bins and the mode-separation score).
GroupSummary group_bias(std::span<const SubjectMetrics> records,
                        std::string_view group);

/// Probability that a random positive value exceeds a random negative one,
/// ties counted 1/2 (rank-sum formulation). Requires both classes.
double roc_auc(std::span<const std::pair<double, bool>> values);

/// Median/MAD/histogram of `values` with Freedman-Diaconis bins on the pooled
/// sample, plus the mode-separation score against `other`. Needs two values
/// per side.
DistributionSummary distribution_summary(std::span<const double> values,
                                         std::span<const double> other);

// Order statistics used throughout (median of an even-sized sample is the
// mean of the central pair; quantiles are linearly interpolated, type 7).
double median(std::span<const double> values);
double mad(std::span<const double> values);
double quantile(std::span<const double> values, double p);

}  // namespace segaudit
