#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "segaudit/errorsim.hpp"
#include "segaudit/metrics.hpp"

namespace segaudit {

enum class SpacePolicy { native, resample_to_reference };

std::string_view to_string(SpacePolicy p);
SpacePolicy space_policy_from_string(std::string_view s);

/// Audit configuration. prediction_pattern maps a subject id to its predicted
/// label file via the "{id}" placeholder (e.g. "preds/{id}.nii.gz", relative
/// to the config file); when empty, the manifest's own prediction entries are
/// used. resolution_pair_* is provenance metadata describing the experiment
/// the predictions came from. The space policy governs DSC only: by default
/// predictions are majority-vote resampled to the reference geometry first,
/// while volume bias always compares physical volumes in native spaces;
/// "native" instead requires matching geometries and fails loudly otherwise.
struct AuditConfig {
  std::filesystem::path manifest;
  std::string prediction_pattern;
  std::vector<std::int32_t> labels{1};
  SpacePolicy space = SpacePolicy::resample_to_reference;
  std::string positive_group = "L";
  std::optional<double> resolution_pair_high_mm;
  std::optional<double> resolution_pair_low_mm;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
};

/// Parse a JSON config file; relative paths resolve against the file's
/// directory and defaults are materialized (output_dir falls back to
/// $SEGAUDIT_OUTPUT_DIR, then ".").
AuditConfig load_audit_config(const std::filesystem::path& path);

struct AucEntry {
  std::int32_t label = 0;
  int n_positive = 0;
  int n_negative = 0;
  std::optional<double> predicted_volumes;
  std::optional<double> reference_volumes;
};

struct Provenance {
  std::string tool;
  std::string version;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string config_json;  // materialized configuration, canonical JSON
};

struct AuditReport {
  std::vector<SubjectMetrics> rows;           // ordered by (subject_id, label)
  std::vector<GroupSummary> groups;           // per (label, group)
  std::vector<AucEntry> auc;                  // per label; AUC only when both
                                              // groups have predictions
  std::string positive_group;
  std::vector<std::string> missing_predictions;
  Provenance provenance;
};

/// Run the audit and write report.csv / report.json into output_dir.
/// Deterministic given (config, seed); missing prediction files are listed,
/// never silently skipped.
AuditReport run_audit(const AuditConfig& config);

/// Error-contrast experiment on a synthetic ribbon cohort: calibrated random
/// vs. systematic perturbations plus majority-vote downsampling, emitted as
/// plot-ready fig1.csv / fig1.json.
struct Fig1Config {
  int n_subjects = 20;
  bool include_random = true;
  bool include_systematic = true;
  std::vector<double> downsample_mm{2.0, 3.0};
  double bias_target = 0.15;
  std::filesystem::path output_dir;
  std::uint64_t seed = 20;
};

struct Fig1ModelSummary {
  std::string model;
  int n = 0;
  double dsc_mean = 0.0;
  double dsc_sd = 0.0;
  double median_bias = 0.0;
  double bias_q1 = 0.0;
  double bias_q3 = 0.0;
  double volume_median = 0.0;
  double volume_mad = 0.0;
  Histogram volume_histogram;  // shared bins pooled over all models
};

struct Fig1Row {
  std::string model;
  std::string subject_id;
  std::optional<double> p;
  double dsc = 0.0;
  double volume_pred_mm3 = 0.0;
  double volume_ref_mm3 = 0.0;
  double volume_bias = 0.0;
};

struct Fig1Result {
  Fig1Calibration calibration;
  std::vector<Fig1Row> rows;
  std::vector<Fig1ModelSummary> models;
  Provenance provenance;
};

Fig1Result run_fig1_experiment(const Fig1Config& config);

/// FNV-1a 64-bit hash as 16 hex digits (used for config provenance).
std::string fnv1a64_hex(std::string_view bytes);

/// Output directory default: $SEGAUDIT_OUTPUT_DIR if set, "." otherwise.
std::filesystem::path default_output_dir();

}  // namespace segaudit
