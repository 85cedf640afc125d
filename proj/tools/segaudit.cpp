// segaudit command-line tool: thin wrappers over the core library. Exit codes:
// 0 success, 1 validation/usage error, 2 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "segaudit/audit.hpp"
#include "segaudit/csv.hpp"
#include "segaudit/error.hpp"
#include "segaudit/errorsim.hpp"
#include "segaudit/io.hpp"
#include "segaudit/metrics.hpp"
#include "segaudit/phantom.hpp"
#include "segaudit/resample.hpp"
#include "segaudit/version.hpp"

namespace {

using namespace segaudit;

VoxelGeometry isotropic_target(const VoxelGeometry& g,
                               const std::vector<double>& target_mm) {
  std::vector<std::int64_t> dims;
  std::vector<double> sizes;
  for (int a = 0; a < g.ndim(); ++a) {
    const double mm = target_mm.size() == 1 ? target_mm[0]
                                            : target_mm[static_cast<std::size_t>(a)];
    if (!(mm > 0.0)) throw validation_error("target voxel size must be positive");
    dims.push_back(std::max<std::int64_t>(
        1, std::llround(static_cast<double>(g.dim(a)) * g.voxel_size(a) / mm)));
    sizes.push_back(mm);
  }
  return VoxelGeometry::make(dims, sizes);
}

struct PhantomArgs {
  std::string out;
  std::string kind = "ribbon";
  int n_per_group = 10;
  double effect = 1.0;
  double jitter = 0.05;
  std::vector<double> split{5.0 / 9.0, 1.0 / 9.0, 3.0 / 9.0};
  std::vector<double> resolution_pair;
  std::string format = "nifti";
  std::uint64_t seed = 0;
};

int cmd_phantom(const PhantomArgs& a) {
  PhantomSpec pspec = a.kind == "ellipsoid" ? PhantomSpec::default_ellipsoid()
                                            : PhantomSpec::default_ribbon();
  CohortSpec cspec;
  cspec.n_per_group = a.n_per_group;
  cspec.volume_effect = a.effect;
  cspec.scale_jitter_sigma = a.jitter;
  if (a.split.size() != 3) {
    throw validation_error("--split needs train,val,test fractions");
  }
  cspec.split_fractions = {a.split[0], a.split[1], a.split[2]};
  cspec.seed = a.seed;

  Cohort cohort = generate_cohort(pspec, cspec);
  if (!a.resolution_pair.empty()) {
    if (a.resolution_pair.size() != 2) {
      throw validation_error("--resolution-pair needs high_mm,low_mm");
    }
    cohort = assign_group_resolutions(cohort, a.resolution_pair[0],
                                      a.resolution_pair[1]);
  }
  const auto fmt =
      a.format == "simplevol" ? VolumeFormat::simplevol : VolumeFormat::nifti;
  const auto manifest = write_cohort(cohort, a.out, fmt);
  std::cout << manifest.string() << "\n";
  return 0;
}

struct ResampleArgs {
  std::string in;
  std::string out;
  bool labels = false;
  std::vector<double> target_mm;
  std::vector<double> factor;
};

int cmd_resample(const ResampleArgs& a) {
  if (a.target_mm.empty() == a.factor.empty()) {
    throw validation_error("resample: give exactly one of --target-mm or --factor");
  }
  if (a.labels) {
    const LabelMap m = load_labels(a.in);
    const LabelMap r =
        a.factor.empty()
            ? resample_labels_majority(m, isotropic_target(m.geometry(), a.target_mm))
            : resample_labels_majority(m, ScaleFactor::make(a.factor));
    save_volume(r, a.out);
  } else {
    const VoxelGrid g = load_intensity(a.in);
    const VoxelGrid r =
        a.factor.empty()
            ? resample_intensity(g, isotropic_target(g.geometry(), a.target_mm))
            : resample_intensity(g, ScaleFactor::make(a.factor));
    save_volume(r, a.out);
  }
  return 0;
}

struct SimulateArgs {
  std::string manifest;
  std::string in;
  std::string kind;
  double p = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_simulate_error(const SimulateArgs& a) {
  if (a.manifest.empty() == a.in.empty()) {
    throw validation_error("simulate-error: give exactly one of --manifest or --in");
  }
  const ErrorKind kind = error_kind_from_string(a.kind);
  std::filesystem::create_directories(a.out);

  struct Item {
    std::string id;
    std::filesystem::path source;
    std::string file_name;
  };
  std::vector<Item> items;
  if (!a.manifest.empty()) {
    const auto entries = read_cohort_manifest(a.manifest);
    const auto base = std::filesystem::path(a.manifest).parent_path();
    for (const auto& e : entries) {
      items.push_back({e.id, base / e.reference,
                       std::filesystem::path(e.reference).filename().string()});
    }
  } else {
    const std::filesystem::path p(a.in);
    std::string stem = p.filename().string();
    if (const auto pos = stem.find('.'); pos != std::string::npos) {
      stem = stem.substr(0, pos);
    }
    items.push_back({stem, p, p.filename().string()});
  }

  CsvTable table;
  table.header = {"subject", "kind", "p", "dsc", "volume_bias"};
  for (std::size_t i = 0; i < items.size(); ++i) {
    const LabelMap ref = load_labels(items[i].source);
    const LabelMap pert =
        perturb(ref, {kind, a.p, subject_error_seed(a.seed, kind, i)});
    save_volume(pert, std::filesystem::path(a.out) / items[i].file_name);
    double bias = 0.0;
    double dice = 1.0;
    for (std::int32_t label : ref.present_labels()) {
      if (label == 0) continue;
      dice = dsc(pert, ref, label);
      bias = volume_bias(pert, ref, label);
      break;  // first foreground label (phantom cohorts are binary)
    }
    table.rows.push_back({items[i].id, std::string(to_string(kind)),
                          format_double(a.p), format_double(dice),
                          format_double(bias)});
  }
  write_csv(table, std::filesystem::path(a.out) / "errors.csv");
  std::cout << (std::filesystem::path(a.out) / "errors.csv").string() << "\n";
  return 0;
}

struct MetricsArgs {
  std::string pred;
  std::string ref;
  std::vector<std::int32_t> labels{1};
  std::string space = "resample-to-reference";
  std::string subject = "subject";
  std::string group;
};

int cmd_metrics(const MetricsArgs& a) {
  const LabelMap ref = load_labels(a.ref);
  const LabelMap pred = load_labels(a.pred);
  const SpacePolicy space = space_policy_from_string(a.space);

  std::optional<LabelMap> aligned;
  if (pred.geometry() != ref.geometry()) {
    if (space == SpacePolicy::native) {
      throw validation_error(
          "metrics: geometries differ under the native space policy");
    }
    aligned = resample_labels_majority(pred, ref.geometry());
  }
  const LabelMap& dsc_side = aligned ? *aligned : pred;

  CsvTable table;
  table.header = {"subject_id", "group",           "label",         "dsc",
                  "volume_pred_mm3", "volume_ref_mm3", "volume_bias"};
  for (std::int32_t label : a.labels) {
    const double vp = static_cast<double>(pred.count(label)) *
                      pred.geometry().voxel_volume();
    const double vr =
        static_cast<double>(ref.count(label)) * ref.geometry().voxel_volume();
    table.rows.push_back({a.subject, a.group, format_int(label),
                          format_double(dsc(dsc_side, ref, label)),
                          format_double(vp), format_double(vr),
                          format_double(volume_bias(pred, ref, label))});
  }
  std::cout << to_csv_string(table);
  return 0;
}

struct AucArgs {
  std::string csv;
  std::string positive_group;
  std::string value_column = "volume";
  std::string group_column = "group";
};

int cmd_auc(const AucArgs& a) {
  const CsvTable table = read_csv(a.csv);
  const auto value_col = table.column(a.value_column);
  const auto group_col = table.column(a.group_column);
  std::vector<std::pair<double, bool>> values;
  for (const auto& row : table.rows) {
    values.emplace_back(std::stod(row[value_col]),
                        row[group_col] == a.positive_group);
  }
  std::cout << format_double(roc_auc(values)) << "\n";
  return 0;
}

struct AuditArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_audit(const AuditArgs& a) {
  AuditConfig config = load_audit_config(a.config);
  if (!a.out.empty()) config.output_dir = a.out;
  if (a.seed) config.seed = *a.seed;
  const AuditReport report = run_audit(config);

  std::cout << "subjects: " << report.rows.size() << " rows, "
            << report.missing_predictions.size() << " missing predictions\n";
  for (const auto& g : report.groups) {
    std::cout << "group " << g.group << " label " << g.label
              << ": median bias " << format_double(g.median_volume_bias)
              << ", mean dsc " << format_double(g.dsc_mean) << "\n";
  }
  for (const auto& e : report.auc) {
    std::cout << "auc label " << e.label << ": predicted "
              << (e.predicted_volumes ? format_double(*e.predicted_volumes) : "n/a")
              << ", reference "
              << (e.reference_volumes ? format_double(*e.reference_volumes) : "n/a")
              << "\n";
  }
  std::cout << (config.output_dir / "report.json").string() << "\n";
  return 0;
}

struct Fig1Args {
  std::string out;
  int n = 20;
  std::uint64_t seed = 20;
  std::vector<std::string> models{"random", "systematic", "downsample-2mm",
                                  "downsample-3mm"};
  double bias_target = 0.15;
};

int cmd_fig1(const Fig1Args& a) {
  Fig1Config config;
  config.n_subjects = a.n;
  config.seed = a.seed;
  config.output_dir = a.out;
  config.bias_target = a.bias_target;
  config.include_random = false;
  config.include_systematic = false;
  config.downsample_mm.clear();
  for (const auto& m : a.models) {
    if (m == "random") {
      config.include_random = true;
    } else if (m == "systematic") {
      config.include_systematic = true;
    } else if (m.rfind("downsample-", 0) == 0 && m.size() > 13 &&
               m.compare(m.size() - 2, 2, "mm") == 0) {
      config.downsample_mm.push_back(
          std::stod(m.substr(11, m.size() - 13)));
    } else {
      throw validation_error("fig1: unknown model '" + m + "'");
    }
  }
  const Fig1Result result = run_fig1_experiment(config);
  std::cout << "p_random " << format_double(result.calibration.p_random)
            << ", p_dilate " << format_double(result.calibration.p_dilate) << "\n";
  std::cout << (config.output_dir / "fig1.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resolution-bias audit toolkit for volumetric segmentations"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  PhantomArgs phantom_args;
  auto* phantom = app.add_subcommand(
      "phantom", "Generate a synthetic two-group phantom cohort");
  phantom->add_option("--out", phantom_args.out, "Output directory")->required();
  phantom->add_option("--kind", phantom_args.kind, "Structure kind")
      ->check(CLI::IsMember({"ribbon", "ellipsoid"}));
  phantom->add_option("--n-per-group", phantom_args.n_per_group, "Subjects per group");
  phantom->add_option("--effect", phantom_args.effect,
                      "Group volume effect ratio H:L");
  phantom->add_option("--jitter", phantom_args.jitter,
                      "Subject log-volume jitter sigma");
  phantom->add_option("--split", phantom_args.split, "Split fractions train,val,test")
      ->delimiter(',')
      ->expected(3);
  phantom->add_option("--resolution-pair", phantom_args.resolution_pair,
                      "Assign group resolutions high_mm,low_mm")
      ->delimiter(',')
      ->expected(2);
  phantom->add_option("--format", phantom_args.format, "Volume file format")
      ->check(CLI::IsMember({"nifti", "simplevol"}));
  phantom->add_option("--seed", phantom_args.seed, "Cohort seed");

  ResampleArgs resample_args;
  auto* resample = app.add_subcommand(
      "resample", "Resample one volume (intensity or labels)");
  resample->add_option("--in", resample_args.in, "Input volume")->required();
  resample->add_option("--out", resample_args.out, "Output volume")->required();
  resample->add_flag("--labels", resample_args.labels,
                     "Treat input as labels (majority vote)");
  resample->add_option("--target-mm", resample_args.target_mm,
                       "Target voxel size (one value or x,y,z)")
      ->delimiter(',');
  resample->add_option("--factor", resample_args.factor,
                       "Scale factor (one value or x,y,z)")
      ->delimiter(',');

  SimulateArgs simulate_args;
  auto* simulate = app.add_subcommand(
      "simulate-error", "Perturb reference labels with a synthetic error model");
  simulate->add_option("--manifest", simulate_args.manifest, "Cohort manifest");
  simulate->add_option("--in", simulate_args.in, "Single label volume");
  simulate->add_option("--kind", simulate_args.kind, "Error kind")
      ->required()
      ->check(CLI::IsMember(
          {"random-balanced", "systematic-dilate", "systematic-erode"}));
  simulate->add_option("--p", simulate_args.p, "Boundary probability in [0,1]")
      ->required();
  simulate->add_option("--seed", simulate_args.seed, "Seed");
  simulate->add_option("--out", simulate_args.out, "Output directory")->required();

  MetricsArgs metrics_args;
  auto* metrics = app.add_subcommand(
      "metrics", "DSC and volume bias for a prediction/reference pair");
  metrics->add_option("--pred", metrics_args.pred, "Predicted labels")->required();
  metrics->add_option("--ref", metrics_args.ref, "Reference labels")->required();
  metrics->add_option("--label", metrics_args.labels, "Label ids")->delimiter(',');
  metrics->add_option("--space", metrics_args.space, "Metric space policy")
      ->check(CLI::IsMember({"native", "resample-to-reference"}));
  metrics->add_option("--subject", metrics_args.subject, "Subject id for the rows");
  metrics->add_option("--group", metrics_args.group, "Group tag for the rows");

  AucArgs auc_args;
  auto* auc = app.add_subcommand("auc", "Group-classification AUC from a volume CSV");
  auc->add_option("--csv", auc_args.csv, "CSV with group and volume columns")
      ->required();
  auc->add_option("--positive-group", auc_args.positive_group, "Positive class")
      ->required();
  auc->add_option("--value-column", auc_args.value_column, "Value column name");
  auc->add_option("--group-column", auc_args.group_column, "Group column name");

  AuditArgs audit_args;
  auto* audit = app.add_subcommand(
      "audit", "Audit external predictions against a cohort manifest");
  audit->add_option("--config", audit_args.config, "JSON config file")->required();
  audit->add_option("--out", audit_args.out, "Override output directory");
  std::uint64_t audit_seed = 0;
  auto* seed_opt = audit->add_option("--seed", audit_seed, "Override seed");

  Fig1Args fig1_args;
  auto* fig1 = app.add_subcommand(
      "fig1", "Error-model contrast experiment on the default ribbon cohort");
  fig1->add_option("--out", fig1_args.out, "Output directory")->required();
  fig1->add_option("--n", fig1_args.n, "Cohort size (even)");
  fig1->add_option("--seed", fig1_args.seed, "Seed");
  fig1->add_option("--models", fig1_args.models,
                   "Model set: random,systematic,downsample-<mm>mm")
      ->delimiter(',');
  fig1->add_option("--bias-target", fig1_args.bias_target,
                   "Median bias target for the systematic model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the usage message
    return 1;
  }

  try {
    if (app.got_subcommand(phantom)) return cmd_phantom(phantom_args);
    if (app.got_subcommand(resample)) return cmd_resample(resample_args);
    if (app.got_subcommand(simulate)) return cmd_simulate_error(simulate_args);
    if (app.got_subcommand(metrics)) return cmd_metrics(metrics_args);
    if (app.got_subcommand(auc)) return cmd_auc(auc_args);
    if (app.got_subcommand(audit)) {
      if (seed_opt->count() > 0) audit_args.seed = audit_seed;
      return cmd_audit(audit_args);
    }
    if (app.got_subcommand(fig1)) return cmd_fig1(fig1_args);
  } catch (const segaudit::validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const segaudit::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
