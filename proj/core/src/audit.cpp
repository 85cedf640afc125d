#include "segaudit/audit.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "segaudit/csv.hpp"
#include "segaudit/error.hpp"
#include "segaudit/io.hpp"
#include "segaudit/phantom.hpp"
#include "segaudit/resample.hpp"
#include "segaudit/version.hpp"

namespace segaudit {

namespace {

using nlohmann::json;

std::string substitute_id(const std::string& pattern, const std::string& id) {
  const auto pos = pattern.find("{id}");
  if (pos == std::string::npos) {
    throw validation_error("prediction_pattern must contain the {id} placeholder");
  }
  std::string out = pattern;
  out.replace(pos, 4, id);
  return out;
}

json histogram_to_json(const Histogram& h) {
  json j;
  j["bin_edges"] = h.bin_edges;
  j["counts"] = h.counts;
  return j;
}

json group_summary_to_json(const GroupSummary& g) {
  json j;
  j["group"] = g.group;
  j["label"] = g.label;
  j["n"] = g.n;
  j["median_volume_bias"] = g.median_volume_bias;
  j["bias_q1"] = g.bias_q1;
  j["bias_q3"] = g.bias_q3;
  j["dsc_mean"] = g.dsc_mean;
  j["dsc_sd"] = g.dsc_sd;
  j["volume_median"] = g.volume_median;
  j["volume_mad"] = g.volume_mad;
  j["volume_histogram"] = histogram_to_json(g.volume_histogram);
  if (g.mode_separation && std::isfinite(*g.mode_separation)) {
    j["mode_separation"] = *g.mode_separation;
  } else {
    j["mode_separation"] = nullptr;  // absent complement, or degenerate spread
  }
  j["separation_degenerate"] = g.separation_degenerate;
  return j;
}

json provenance_to_json(const Provenance& p) {
  json j;
  j["tool"] = p.tool;
  j["version"] = p.version;
  j["config_hash"] = p.config_hash;
  j["seed"] = p.seed;
  j["config"] = json::parse(p.config_json);
  return j;
}

Provenance make_provenance(const json& config_echo, std::uint64_t seed) {
  Provenance p;
  p.tool = kToolName;
  p.version = kToolVersion;
  p.config_json = config_echo.dump();
  p.config_hash = fnv1a64_hex(p.config_json);
  p.seed = seed;
  return p;
}

void write_text_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error("cannot open file for writing: " + path.string());
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  f.flush();
  if (!f) throw io_error("failed to write file: " + path.string());
}

const std::vector<std::string> kMetricsHeader = {
    "subject_id", "group",           "label",         "dsc",
    "volume_pred_mm3", "volume_ref_mm3", "volume_bias"};

std::vector<std::string> metrics_row(const SubjectMetrics& r) {
  return {r.subject_id,
          r.group,
          format_int(r.label),
          format_double(r.dsc),
          format_double(r.volume_pred_mm3),
          format_double(r.volume_ref_mm3),
          format_double(r.volume_bias)};
}

/// AUC entries per label over per-subject volumes; AUC fields only when both
/// classes are present.
std::vector<AucEntry> compute_auc(const std::vector<SubjectMetrics>& rows,
                                  const std::string& positive_group) {
  std::set<std::int32_t> labels;
  for (const auto& r : rows) labels.insert(r.label);
  std::vector<AucEntry> out;
  for (std::int32_t label : labels) {
    AucEntry e;
    e.label = label;
    std::vector<std::pair<double, bool>> pred, ref;
    for (const auto& r : rows) {
      if (r.label != label) continue;
      const bool positive = r.group == positive_group;
      positive ? ++e.n_positive : ++e.n_negative;
      pred.emplace_back(r.volume_pred_mm3, positive);
      ref.emplace_back(r.volume_ref_mm3, positive);
    }
    if (e.n_positive > 0 && e.n_negative > 0) {
      e.predicted_volumes = roc_auc(pred);
      e.reference_volumes = roc_auc(ref);
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

std::string_view to_string(SpacePolicy p) {
  return p == SpacePolicy::native ? "native" : "resample-to-reference";
}

SpacePolicy space_policy_from_string(std::string_view s) {
  if (s == "native") return SpacePolicy::native;
  if (s == "resample-to-reference") return SpacePolicy::resample_to_reference;
  throw validation_error("unknown space policy: " + std::string(s));
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("SEGAUDIT_OUTPUT_DIR")) {
    if (*env) return env;
  }
  return ".";
}

AuditConfig load_audit_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open config: " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw io_error("config: malformed JSON in " + path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();
  auto resolve = [&base](const std::filesystem::path& p) {
    return p.is_absolute() ? p : base / p;
  };
  AuditConfig c;
  try {
    c.manifest = resolve(j.at("manifest").get<std::string>());
    if (j.contains("prediction_pattern") && !j.at("prediction_pattern").is_null()) {
      const auto pattern = j.at("prediction_pattern").get<std::string>();
      c.prediction_pattern =
          pattern.empty() ? pattern : resolve(pattern).string();
    }
    if (j.contains("labels")) {
      c.labels = j.at("labels").get<std::vector<std::int32_t>>();
    }
    if (j.contains("space")) {
      c.space = space_policy_from_string(j.at("space").get<std::string>());
    }
    if (j.contains("positive_group")) {
      c.positive_group = j.at("positive_group").get<std::string>();
    }
    if (j.contains("resolution_pair") && !j.at("resolution_pair").is_null()) {
      c.resolution_pair_high_mm = j.at("resolution_pair").at("high_mm").get<double>();
      c.resolution_pair_low_mm = j.at("resolution_pair").at("low_mm").get<double>();
    }
    if (j.contains("output_dir")) {
      c.output_dir = resolve(j.at("output_dir").get<std::string>());
    } else {
      c.output_dir = default_output_dir();
    }
    c.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw io_error("config: invalid structure in " + path.string() + ": " + e.what());
  }
  return c;
}

namespace {

json audit_config_echo(const AuditConfig& c) {
  json j;
  j["manifest"] = c.manifest.string();
  j["prediction_pattern"] = c.prediction_pattern;
  j["labels"] = c.labels;
  j["space"] = std::string(to_string(c.space));
  j["positive_group"] = c.positive_group;
  if (c.resolution_pair_high_mm && c.resolution_pair_low_mm) {
    j["resolution_pair"] = {{"high_mm", *c.resolution_pair_high_mm},
                            {"low_mm", *c.resolution_pair_low_mm}};
  } else {
    j["resolution_pair"] = nullptr;
  }
  j["output_dir"] = c.output_dir.string();
  j["seed"] = c.seed;
  return j;
}

}  // namespace

AuditReport run_audit(const AuditConfig& config) {
  if (config.labels.empty()) {
    throw validation_error("audit: labels of interest must be non-empty");
  }
  auto entries = read_cohort_manifest(config.manifest);
  std::sort(entries.begin(), entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
  const auto base = config.manifest.parent_path();

  AuditReport report;
  report.positive_group = config.positive_group;
  std::vector<std::string> geometry_violations;

  for (const auto& e : entries) {
    std::filesystem::path pred_path;
    if (!config.prediction_pattern.empty()) {
      pred_path = substitute_id(config.prediction_pattern, e.id);
    } else if (e.prediction) {
      pred_path = base / *e.prediction;
    } else {
      report.missing_predictions.push_back(e.id);
      continue;
    }
    if (!std::filesystem::exists(pred_path)) {
      report.missing_predictions.push_back(e.id);
      continue;
    }
    const LabelMap reference = load_labels(base / e.reference);
    const LabelMap prediction = load_labels(pred_path);

    const bool same_geometry = prediction.geometry() == reference.geometry();
    std::optional<LabelMap> aligned;
    if (!same_geometry) {
      if (config.space == SpacePolicy::native) {
        geometry_violations.push_back(e.id);
        continue;
      }
      aligned = resample_labels_majority(prediction, reference.geometry());
    }
    const LabelMap& dsc_side = aligned ? *aligned : prediction;

    for (std::int32_t label : config.labels) {
      SubjectMetrics r;
      r.subject_id = e.id;
      r.group = e.group;
      r.label = label;
      r.dsc = dsc(dsc_side, reference, label);
      // bias compares physical volumes in each map's native space
      r.volume_pred_mm3 = static_cast<double>(prediction.count(label)) *
                          prediction.geometry().voxel_volume();
      r.volume_ref_mm3 = static_cast<double>(reference.count(label)) *
                         reference.geometry().voxel_volume();
      r.volume_bias = volume_bias(prediction, reference, label);
      report.rows.push_back(std::move(r));
    }
  }

  if (!geometry_violations.empty()) {
    std::string msg = "audit: native space policy but prediction geometry differs for:";
    for (const auto& id : geometry_violations) msg += " " + id;
    throw validation_error(msg);
  }

  // Per (label, group) summaries over rows that share the label.
  for (std::int32_t label : config.labels) {
    std::vector<SubjectMetrics> of_label;
    std::set<std::string> groups;
    for (const auto& r : report.rows) {
      if (r.label == label) {
        of_label.push_back(r);
        groups.insert(r.group);
      }
    }
    for (const auto& g : groups) {
      report.groups.push_back(group_bias(of_label, g));
    }
  }
  report.auc = compute_auc(report.rows, config.positive_group);
  report.provenance = make_provenance(audit_config_echo(config), config.seed);

  // Emit report.csv / report.json.
  std::filesystem::create_directories(config.output_dir);
  CsvTable table;
  table.header = kMetricsHeader;
  for (const auto& r : report.rows) table.rows.push_back(metrics_row(r));
  write_csv(table, config.output_dir / "report.csv");

  json out;
  out["positive_group"] = report.positive_group;
  out["missing_predictions"] = report.missing_predictions;
  out["groups"] = json::array();
  for (const auto& g : report.groups) out["groups"].push_back(group_summary_to_json(g));
  out["auc"] = json::array();
  for (const auto& a : report.auc) {
    json e;
    e["label"] = a.label;
    e["n_positive"] = a.n_positive;
    e["n_negative"] = a.n_negative;
    e["predicted_volumes"] = a.predicted_volumes ? json(*a.predicted_volumes) : json(nullptr);
    e["reference_volumes"] = a.reference_volumes ? json(*a.reference_volumes) : json(nullptr);
    out["auc"].push_back(std::move(e));
  }
  out["provenance"] = provenance_to_json(report.provenance);
  write_text_file(config.output_dir / "report.json", out.dump(2) + "\n");
  return report;
}

namespace {

json fig1_config_echo(const Fig1Config& c) {
  json j;
  j["n_subjects"] = c.n_subjects;
  j["include_random"] = c.include_random;
  j["include_systematic"] = c.include_systematic;
  j["downsample_mm"] = c.downsample_mm;
  j["bias_target"] = c.bias_target;
  j["output_dir"] = c.output_dir.string();
  j["seed"] = c.seed;
  return j;
}

std::string downsample_model_name(double mm) {
  return "downsample-" + format_double(mm) + "mm";
}

}  // namespace

Fig1Result run_fig1_experiment(const Fig1Config& config) {
  if (config.n_subjects < 2 || config.n_subjects % 2 != 0) {
    throw validation_error("fig1: n_subjects must be an even number >= 2");
  }
  if (!config.include_random && !config.include_systematic &&
      config.downsample_mm.empty()) {
    throw validation_error("fig1: no models configured");
  }

  const PhantomSpec pspec = PhantomSpec::default_ribbon();
  CohortSpec cspec;
  cspec.n_per_group = config.n_subjects / 2;
  cspec.volume_effect = 1.0;
  cspec.scale_jitter_sigma = 0.05;
  cspec.seed = config.seed;
  const Cohort cohort = generate_cohort(pspec, cspec);

  std::vector<LabelMap> refs;
  refs.reserve(cohort.subjects.size());
  for (const auto& s : cohort.subjects) refs.push_back(s.reference);

  Fig1Result result;
  if (config.include_random || config.include_systematic) {
    result.calibration =
        calibrate_fig1_pair(refs, config.seed, config.bias_target);
  }

  auto add_row = [&result](std::string model, const std::string& id,
                           std::optional<double> p, double d, double vp, double vr) {
    Fig1Row row;
    row.model = std::move(model);
    row.subject_id = id;
    row.p = p;
    row.dsc = d;
    row.volume_pred_mm3 = vp;
    row.volume_ref_mm3 = vr;
    row.volume_bias = (vp - vr) / vr;
    result.rows.push_back(std::move(row));
  };

  for (std::size_t i = 0; i < cohort.subjects.size(); ++i) {
    const auto& s = cohort.subjects[i];
    const double ref_volume = label_volume(s.reference, kStructureLabel);
    if (config.include_random) {
      const LabelMap pred = perturb(
          s.reference,
          {ErrorKind::random_balanced, result.calibration.p_random,
           subject_error_seed(config.seed, ErrorKind::random_balanced, i)});
      add_row(std::string(to_string(ErrorKind::random_balanced)), s.id,
              result.calibration.p_random, dsc(pred, s.reference, kStructureLabel),
              label_volume(pred, kStructureLabel), ref_volume);
    }
    if (config.include_systematic) {
      const LabelMap pred = perturb(
          s.reference,
          {ErrorKind::systematic_dilate, result.calibration.p_dilate,
           subject_error_seed(config.seed, ErrorKind::systematic_dilate, i)});
      add_row(std::string(to_string(ErrorKind::systematic_dilate)), s.id,
              result.calibration.p_dilate, dsc(pred, s.reference, kStructureLabel),
              label_volume(pred, kStructureLabel), ref_volume);
    }
    for (double mm : config.downsample_mm) {
      const auto curve = downsampling_bias_curve(s.reference, {&mm, 1});
      const double low_volume = curve.front().second;
      // DSC against the native reference after resampling back (the default
      // resample-to-reference policy)
      const auto& g = s.reference.geometry();
      std::vector<std::int64_t> dims;
      std::vector<double> sizes;
      for (int a = 0; a < g.ndim(); ++a) {
        dims.push_back(std::max<std::int64_t>(
            1, std::llround(static_cast<double>(g.dim(a)) * g.voxel_size(a) / mm)));
        sizes.push_back(mm);
      }
      const LabelMap low =
          resample_labels_majority(s.reference, VoxelGeometry::make(dims, sizes));
      const LabelMap back = resample_labels_majority(low, g);
      add_row(downsample_model_name(mm), s.id, std::nullopt,
              dsc(back, s.reference, kStructureLabel), low_volume, ref_volume);
    }
  }

  // Per-model summaries with histogram bins shared across models.
  std::vector<double> pooled;
  for (const auto& r : result.rows) pooled.push_back(r.volume_pred_mm3);
  std::vector<std::string> model_order;
  for (const auto& r : result.rows) {
    if (std::find(model_order.begin(), model_order.end(), r.model) ==
        model_order.end()) {
      model_order.push_back(r.model);
    }
  }
  for (const auto& name : model_order) {
    std::vector<double> dscs, biases, volumes, others;
    for (const auto& r : result.rows) {
      if (r.model == name) {
        dscs.push_back(r.dsc);
        biases.push_back(r.volume_bias);
        volumes.push_back(r.volume_pred_mm3);
      } else {
        others.push_back(r.volume_pred_mm3);
      }
    }
    Fig1ModelSummary m;
    m.model = name;
    m.n = static_cast<int>(volumes.size());
    m.dsc_mean = std::accumulate(dscs.begin(), dscs.end(), 0.0) /
                 static_cast<double>(dscs.size());
    double ss = 0.0;
    for (double d : dscs) ss += (d - m.dsc_mean) * (d - m.dsc_mean);
    m.dsc_sd = dscs.size() > 1
                   ? std::sqrt(ss / static_cast<double>(dscs.size() - 1))
                   : 0.0;
    m.median_bias = median(biases);
    m.bias_q1 = quantile(biases, 0.25);
    m.bias_q3 = quantile(biases, 0.75);
    m.volume_median = median(volumes);
    m.volume_mad = mad(volumes);
    if (!others.empty()) {
      m.volume_histogram = distribution_summary(volumes, others).histogram;
    } else {
      m.volume_histogram = distribution_summary(volumes, volumes).histogram;
    }
    result.models.push_back(std::move(m));
  }

  result.provenance = make_provenance(fig1_config_echo(config), config.seed);

  // Emit fig1.csv / fig1.json.
  std::filesystem::create_directories(config.output_dir);
  CsvTable table;
  table.header = {"model", "subject_id", "p", "dsc", "volume_pred_mm3",
                  "volume_ref_mm3", "volume_bias"};
  for (const auto& r : result.rows) {
    table.rows.push_back({r.model, r.subject_id,
                          r.p ? format_double(*r.p) : std::string(),
                          format_double(r.dsc), format_double(r.volume_pred_mm3),
                          format_double(r.volume_ref_mm3),
                          format_double(r.volume_bias)});
  }
  write_csv(table, config.output_dir / "fig1.csv");

  json out;
  if (config.include_random || config.include_systematic) {
    out["calibration"] = {{"p_random", result.calibration.p_random},
                          {"p_dilate", result.calibration.p_dilate},
                          {"mean_dsc_random", result.calibration.mean_dsc_random},
                          {"mean_dsc_dilate", result.calibration.mean_dsc_dilate},
                          {"median_bias_random", result.calibration.median_bias_random},
                          {"median_bias_dilate", result.calibration.median_bias_dilate}};
  } else {
    out["calibration"] = nullptr;
  }
  out["models"] = json::array();
  for (const auto& m : result.models) {
    json e;
    e["model"] = m.model;
    e["n"] = m.n;
    e["dsc_mean"] = m.dsc_mean;
    e["dsc_sd"] = m.dsc_sd;
    e["median_bias"] = m.median_bias;
    e["bias_q1"] = m.bias_q1;
    e["bias_q3"] = m.bias_q3;
    e["volume_median"] = m.volume_median;
    e["volume_mad"] = m.volume_mad;
    e["volume_histogram"] = histogram_to_json(m.volume_histogram);
    out["models"].push_back(std::move(e));
  }
  out["provenance"] = provenance_to_json(result.provenance);
  write_text_file(config.output_dir / "fig1.json", out.dump(2) + "\n");
  return result;
}

}  // namespace segaudit
