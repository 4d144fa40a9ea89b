#include "intformer/runner.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "intformer/errors.hpp"
#include "intformer/eval.hpp"
#include "intformer/explain.hpp"
#include "intformer/io.hpp"
#include "intformer/pipeline.hpp"
#include "intformer/synthgen.hpp"
#include "intformer/util.hpp"

namespace intformer {

namespace {

using nlohmann::json;

std::string artifact(const RunConfig& config, const std::string& name) {
  return config.out_dir + "/" + name;
}

void require_artifact(const RunConfig& config, const std::string& name,
                      const std::string& producer) {
  if (!file_exists(artifact(config, name))) {
    throw DependencyError("missing " + artifact(config, name) + "; run `" + producer +
                          "` first");
  }
}

void require_hash(const std::string& artifact_hash, const RunConfig& config,
                  const std::string& name) {
  if (artifact_hash != config_hash(config)) {
    throw DependencyError(name + " was produced by a different config (hash " +
                          artifact_hash + "); re-run the producing subcommand");
  }
}

std::string roman(int stacking) {
  switch (stacking) {
    case 2: return "II";
    case 3: return "III";
    case 4: return "IV";
  }
  return std::to_string(stacking);
}

FeatureCalibration load_calibration(const RunConfig& config) {
  if (config.calibration_path.empty()) return FeatureCalibration::defaults();
  return calibration_from_json_file(config.calibration_path);
}

struct PreparedData {
  WindowsFile train;
  WindowsFile test;
};

json metrics_entry(const ConfusionMatrix& cm) {
  json j;
  j["counts"] = {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}};
  try {
    j["sensitivity"] = sensitivity(cm);
  } catch (const UndefinedMetricError&) {
    j["sensitivity"] = "undefined";
  }
  try {
    j["false_alarm_rate"] = false_alarm_rate(cm);
  } catch (const UndefinedMetricError&) {
    j["false_alarm_rate"] = "undefined";
  }
  return j;
}

std::vector<double> predict_all(const Model& model, const Normalizer& normalizer,
                                const std::vector<LabeledWindow>& windows) {
  std::vector<double> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    out.push_back(model.predict(normalizer.apply(w.features)));
  }
  return out;
}

std::vector<int> labels_of(const std::vector<LabeledWindow>& windows) {
  std::vector<int> labels;
  labels.reserve(windows.size());
  for (const auto& w : windows) labels.push_back(w.label);
  return labels;
}

}  // namespace

void RunConfig::validate() const {
  if (four_leg_intersections < 0 || three_leg_intersections < 0 ||
      four_leg_intersections + three_leg_intersections == 0) {
    throw ConfigError("roster must contain at least one intersection");
  }
  if (days < 1) throw ConfigError("days must be >= 1");
  if (crash_total < 0) throw ConfigError("crash_total must be >= 0");
  if (stacking < 2 || stacking > 4) throw ConfigError("stacking must be 2, 3, or 4");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
  if (smote_k < 1) throw ConfigError("smote_k must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("threshold must lie in (0, 1)");
  }
  if (explain_windows < 1) throw ConfigError("explain_windows must be >= 1");
  if (explain_permutations < 1) throw ConfigError("explain_permutations must be >= 1");
  zone_from_string(zone);
  train_config().validate();
}

std::string RunConfig::run_name() const { return zone + "/" + roman(stacking); }

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.learning_rate = learning_rate;
  t.batch_size = batch_size;
  t.epochs = epochs;
  t.seed = seed_train;
  t.early_stop_patience = early_stop_patience;
  return t;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["four_leg_intersections"] = c.four_leg_intersections;
  j["three_leg_intersections"] = c.three_leg_intersections;
  j["days"] = c.days;
  j["crash_total"] = c.crash_total;
  j["crash_ratio_within"] = c.crash_ratio_within;
  j["crash_ratio_approach"] = c.crash_ratio_approach;
  j["signal_strength"] = c.signal_strength;
  j["diurnal_amplitude"] = c.diurnal_amplitude;
  j["calibration_path"] = c.calibration_path;
  j["zone"] = c.zone;
  j["stacking"] = c.stacking;
  j["correlation_threshold"] = c.correlation_threshold;
  j["selection_trees"] = c.selection_trees;
  j["selection_max_depth"] = c.selection_max_depth;
  j["selection_max_features"] = c.selection_max_features;
  j["test_fraction"] = c.test_fraction;
  j["temporal_split"] = c.temporal_split;
  j["smote_k"] = c.smote_k;
  j["model"] = c.model;
  j["time_k"] = c.hyper.time_k;
  j["d_model"] = c.hyper.d_model;
  j["heads"] = c.hyper.heads;
  j["encoders"] = c.hyper.encoders;
  j["d_ff"] = c.hyper.d_ff;
  j["dropout"] = c.hyper.dropout;
  j["lstm_hidden"] = c.hyper.lstm_hidden;
  j["cnn_kernel"] = c.hyper.cnn_kernel;
  j["cnn_channels"] = c.hyper.cnn_channels;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["early_stop_patience"] = c.early_stop_patience;
  j["threshold"] = c.threshold;
  j["explain_windows"] = c.explain_windows;
  j["explain_permutations"] = c.explain_permutations;
  j["seed_generation"] = c.seed_generation;
  j["seed_selection"] = c.seed_selection;
  j["seed_split"] = c.seed_split;
  j["seed_smote"] = c.seed_smote;
  j["seed_train"] = c.seed_train;
  j["seed_explain"] = c.seed_explain;
  j["out_dir"] = c.out_dir;
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("four_leg_intersections", c.four_leg_intersections);
  get("three_leg_intersections", c.three_leg_intersections);
  get("days", c.days);
  get("crash_total", c.crash_total);
  get("crash_ratio_within", c.crash_ratio_within);
  get("crash_ratio_approach", c.crash_ratio_approach);
  get("signal_strength", c.signal_strength);
  get("diurnal_amplitude", c.diurnal_amplitude);
  get("calibration_path", c.calibration_path);
  get("zone", c.zone);
  get("stacking", c.stacking);
  get("correlation_threshold", c.correlation_threshold);
  get("selection_trees", c.selection_trees);
  get("selection_max_depth", c.selection_max_depth);
  get("selection_max_features", c.selection_max_features);
  get("test_fraction", c.test_fraction);
  get("temporal_split", c.temporal_split);
  get("smote_k", c.smote_k);
  get("model", c.model);
  get("time_k", c.hyper.time_k);
  get("d_model", c.hyper.d_model);
  get("heads", c.hyper.heads);
  get("encoders", c.hyper.encoders);
  get("d_ff", c.hyper.d_ff);
  get("dropout", c.hyper.dropout);
  get("lstm_hidden", c.hyper.lstm_hidden);
  get("cnn_kernel", c.hyper.cnn_kernel);
  get("cnn_channels", c.hyper.cnn_channels);
  get("learning_rate", c.learning_rate);
  get("batch_size", c.batch_size);
  get("epochs", c.epochs);
  get("early_stop_patience", c.early_stop_patience);
  get("threshold", c.threshold);
  get("explain_windows", c.explain_windows);
  get("explain_permutations", c.explain_permutations);
  get("seed_generation", c.seed_generation);
  get("seed_selection", c.seed_selection);
  get("seed_split", c.seed_split);
  get("seed_smote", c.seed_smote);
  get("seed_train", c.seed_train);
  get("seed_explain", c.seed_explain);
  get("out_dir", c.out_dir);
  return c;
}

std::string config_hash(const RunConfig& config) {
  return to_hex64(fnv1a64(config_to_json(config).dump()));
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json::parse(read_file_bytes(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("unparseable config " + path + ": " + e.what());
  }
  for (const std::string& entry : overrides) {
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override must be KEY=VALUE: " + entry);
    }
    const std::string key = entry.substr(0, eq);
    const std::string value = entry.substr(eq + 1);
    try {
      j[key] = json::parse(value);
    } catch (const json::parse_error&) {
      j[key] = value;  // plain string
    }
  }
  RunConfig config = config_from_json(j);
  config.validate();
  return config;
}

void cmd_generate(const RunConfig& config) {
  config.validate();
  const std::string hash = config_hash(config);
  const FeatureCalibration calibration = load_calibration(config);
  const auto roster =
      make_roster(config.four_leg_intersections, config.three_leg_intersections);
  GeneratorOptions options;
  options.days = config.days;
  options.diurnal_amplitude = config.diurnal_amplitude;

  std::vector<IntersectionSnapshot> snapshots =
      generate_snapshot_vector(roster, calibration, config.seed_generation, options);
  std::vector<CrashEvent> crashes;
  if (config.crash_total >= 1) {
    CrashInjectionPlan plan;
    plan.total = config.crash_total;
    plan.zone_ratio_within = config.crash_ratio_within;
    plan.zone_ratio_approach = config.crash_ratio_approach;
    plan.signal_strength = config.signal_strength;
    crashes = inject_crashes(snapshots, roster, plan, calibration,
                             derive_seed(config.seed_generation, 0xc7a5));
  }
  write_snapshots_csv(artifact(config, "snapshots.csv"), snapshots, hash);
  write_crashes_csv(artifact(config, "crashes.csv"), crashes, hash);
  std::cout << "generate: " << snapshots.size() << " snapshots, " << crashes.size()
            << " crashes -> " << config.out_dir << "\n";
}

void cmd_prepare(const RunConfig& config) {
  config.validate();
  const std::string hash = config_hash(config);
  require_artifact(config, "snapshots.csv", "generate");
  require_artifact(config, "crashes.csv", "generate");

  std::string snapshots_hash, crashes_hash;
  const auto snapshots =
      read_snapshots_csv(artifact(config, "snapshots.csv"), &snapshots_hash);
  const auto crashes = read_crashes_csv(artifact(config, "crashes.csv"), &crashes_hash);
  require_hash(snapshots_hash, config, "snapshots.csv");
  require_hash(crashes_hash, config, "crashes.csv");

  const Zone zone = zone_from_string(config.zone);
  const auto roster =
      make_roster(config.four_leg_intersections, config.three_leg_intersections);
  FormattedTable table = zone == Zone::kWithinIntersection
                             ? format_within_intersection(snapshots, roster)
                             : format_approach(snapshots);

  CrashIndexResult indexed = index_crashes(table, crashes, zone);
  if (indexed.ignored_crashes > 0) {
    std::cout << "prepare: warning: " << indexed.ignored_crashes
              << " crash(es) outside the covered time range were ignored\n";
  }
  exclude_post_crash(table, indexed.labels);

  const std::size_t positives =
      static_cast<std::size_t>(std::count(indexed.labels.begin(), indexed.labels.end(), 1));
  std::vector<double> importances;
  if (positives == 0 || positives == indexed.labels.size()) {
    std::cout << "prepare: warning: labels are single-class (" << positives
              << " positive rows); importances fall back to uniform\n";
    importances.assign(table.width(), 1.0 / static_cast<double>(table.width()));
  } else {
    ExtraTreesConfig trees;
    trees.tree_count = config.selection_trees;
    trees.max_depth = config.selection_max_depth;
    trees.max_features = config.selection_max_features;
    trees.seed = config.seed_selection;
    importances = extra_trees_importance(table, indexed.labels, trees);
  }
  const Tensor correlation = correlation_matrix(table);
  const SelectionResult selection = select_features(
      table.column_names, importances, correlation, config.correlation_threshold);
  write_selection_json(artifact(config, "selection.json"), selection, zone, hash);

  const FormattedTable narrowed = apply_selection(table, selection);
  std::vector<LabeledWindow> windows =
      stack_windows(narrowed, indexed.labels, config.stacking);
  std::size_t positive_windows = 0;
  for (const auto& w : windows) positive_windows += static_cast<std::size_t>(w.label);
  if (positive_windows == 0) {
    std::cout << "prepare: warning: zero positive windows\n";
  }

  SplitResult split = split_train_test(windows, config.test_fraction, config.seed_split,
                                       config.temporal_split);
  std::vector<LabeledWindow> balanced;
  std::size_t train_positives = 0;
  for (const auto& w : split.train) train_positives += static_cast<std::size_t>(w.label);
  if (train_positives == 0 || train_positives == split.train.size()) {
    std::cout << "prepare: warning: training set is single-class; SMOTE skipped\n";
    balanced = split.train;
  } else {
    balanced = smote_resample(split.train, config.smote_k, config.seed_smote);
  }

  WindowsFile train_file{hash, zone, config.stacking, narrowed.column_names,
                         std::move(balanced)};
  WindowsFile test_file{hash, zone, config.stacking, narrowed.column_names,
                        std::move(split.test)};
  write_windows_file(artifact(config, "windows-train.bin"), train_file);
  write_windows_file(artifact(config, "windows-test.bin"), test_file);

  json manifest;
  manifest["config_hash"] = hash;
  manifest["run"] = config.run_name();
  manifest["kept_features"] = narrowed.column_names.size();
  manifest["windows_total"] = windows.size();
  manifest["positive_windows"] = positive_windows;
  manifest["train_windows"] = train_file.windows.size();
  manifest["test_windows"] = test_file.windows.size();
  manifest["ignored_crashes"] = indexed.ignored_crashes;
  manifest["files"] = {
      {"windows-train.bin", file_hash_hex(artifact(config, "windows-train.bin"))},
      {"windows-test.bin", file_hash_hex(artifact(config, "windows-test.bin"))}};
  write_file_bytes(artifact(config, "manifest.json"), manifest.dump(2) + "\n");
  std::cout << "prepare: " << config.run_name() << ": kept "
            << narrowed.column_names.size() << "/" << table.width() << " features, "
            << train_file.windows.size() << " train / " << test_file.windows.size()
            << " test windows (" << positive_windows << " positive pre-SMOTE)\n";
}

void cmd_train(const RunConfig& config) {
  config.validate();
  const std::string hash = config_hash(config);
  require_artifact(config, "windows-train.bin", "prepare");
  const WindowsFile train_file =
      read_windows_file(artifact(config, "windows-train.bin"));
  require_hash(train_file.config_hash, config, "windows-train.bin");
  if (train_file.windows.empty()) throw ConfigError("training file holds no windows");

  const int features = static_cast<int>(train_file.column_names.size());
  std::unique_ptr<Model> model = make_model(config.model, config.stacking, features,
                                            config.hyper, config.seed_train);
  const Normalizer normalizer = Normalizer::fit(train_file.windows);
  const TrainResult result = train(*model, train_file.windows, normalizer,
                                   config.train_config());

  Checkpoint checkpoint;
  checkpoint.family = config.model;
  checkpoint.timesteps = config.stacking;
  checkpoint.input_features = features;
  checkpoint.hyper = config.hyper;
  checkpoint.zone = config.zone;
  checkpoint.stacking = config.stacking;
  checkpoint.config_hash = hash;
  checkpoint.params = model->params();
  checkpoint.normalizer = normalizer;
  write_checkpoint(artifact(config, "checkpoint.json"), checkpoint);
  write_losses_csv(artifact(config, "losses.csv"), result.epoch_losses, hash);
  std::cout << "train: " << config.model << " on " << config.run_name() << ": "
            << result.epochs_run << " epochs, final loss "
            << (result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back()) << "\n";
}

void cmd_evaluate(const RunConfig& config) {
  config.validate();
  const std::string hash = config_hash(config);
  require_artifact(config, "manifest.json", "prepare");
  require_artifact(config, "windows-test.bin", "prepare");
  require_artifact(config, "checkpoint.json", "train");

  const json manifest = json::parse(read_file_bytes(artifact(config, "manifest.json")));
  const std::string recorded =
      manifest.at("files").at("windows-test.bin").get<std::string>();
  const std::string current = file_hash_hex(artifact(config, "windows-test.bin"));
  if (recorded != current) {
    throw IoError("windows-test.bin changed since prepare (expected " + recorded +
                  ", found " + current + "); refusing to evaluate");
  }

  const WindowsFile test_file = read_windows_file(artifact(config, "windows-test.bin"));
  require_hash(test_file.config_hash, config, "windows-test.bin");
  const Checkpoint checkpoint = read_checkpoint(artifact(config, "checkpoint.json"));
  require_hash(checkpoint.config_hash, config, "checkpoint.json");
  std::unique_ptr<Model> model = model_from_checkpoint(checkpoint);

  const std::vector<double> predictions =
      predict_all(*model, checkpoint.normalizer, test_file.windows);
  const ConfusionMatrix cm =
      confusion(predictions, labels_of(test_file.windows), config.threshold);

  json metrics = metrics_entry(cm);
  metrics["config_hash"] = hash;
  metrics["model"] = config.model;
  metrics["zone"] = config.zone;
  metrics["stacking"] = roman(config.stacking);
  metrics["threshold"] = config.threshold;
  metrics["test_windows"] = test_file.windows.size();
  metrics["seeds"] = {{"generation", config.seed_generation},
                      {"selection", config.seed_selection},
                      {"split", config.seed_split},
                      {"smote", config.seed_smote},
                      {"train", config.seed_train},
                      {"explain", config.seed_explain}};
  write_file_bytes(artifact(config, "metrics.json"), metrics.dump(2) + "\n");
  std::cout << "evaluate: " << config.model << " on " << config.run_name() << ": "
            << metrics.dump() << "\n";
}

void cmd_explain(const RunConfig& config) {
  config.validate();
  const std::string hash = config_hash(config);
  require_artifact(config, "windows-test.bin", "prepare");
  require_artifact(config, "checkpoint.json", "train");
  const WindowsFile test_file = read_windows_file(artifact(config, "windows-test.bin"));
  require_hash(test_file.config_hash, config, "windows-test.bin");
  const Checkpoint checkpoint = read_checkpoint(artifact(config, "checkpoint.json"));
  require_hash(checkpoint.config_hash, config, "checkpoint.json");
  std::unique_ptr<Model> model = model_from_checkpoint(checkpoint);
  if (test_file.windows.empty()) throw ConfigError("no test windows to explain");

  const Normalizer& normalizer = checkpoint.normalizer;
  const WindowModelFn model_fn = [&](const Tensor& window) {
    return model->predict(normalizer.apply(window));
  };

  // Baseline: every timestep at the training-set feature means.
  const std::size_t f = test_file.column_names.size();
  Tensor baseline({static_cast<std::size_t>(test_file.timesteps), f});
  for (std::size_t t = 0; t < static_cast<std::size_t>(test_file.timesteps); ++t) {
    for (std::size_t j = 0; j < f; ++j) baseline.at(t, j) = normalizer.mean[j];
  }

  AttributionReport report;
  report.timesteps = test_file.timesteps;
  report.feature_names = test_file.column_names;
  const std::size_t n = test_file.windows.size();
  const std::size_t count = std::min(static_cast<std::size_t>(config.explain_windows), n);
  for (std::size_t i = 0; i < count; ++i) {
    // Evenly spaced across the test split.
    const std::size_t idx = i * n / count;
    const LabeledWindow& w = test_file.windows[idx];
    const SampledShapley sampled =
        shapley_sampled(model_fn, w.features, baseline, config.explain_permutations,
                        derive_seed(config.seed_explain, i));
    Tensor shap({static_cast<std::size_t>(test_file.timesteps), f},
                std::vector<double>(sampled.values));
    report.window_ids.push_back(static_cast<int>(idx));
    report.shap_values.push_back(std::move(shap));
    report.feature_values.push_back(w.features);
  }
  write_attributions_csv(artifact(config, "attributions.csv"), report, hash);
  const std::vector<SummaryRow> summary = summary_export(report, 10, true);
  write_summary_csv(artifact(config, "attributions_summary.csv"), summary, hash);
  std::cout << "explain: " << count << " windows, " << report.feature_names.size()
            << " features x " << report.timesteps << " timesteps\n";
}

void cmd_benchmark(const RunConfig& config) {
  config.validate();
  const std::string hash = config_hash(config);
  require_artifact(config, "windows-train.bin", "prepare");
  require_artifact(config, "windows-test.bin", "prepare");
  const WindowsFile train_file =
      read_windows_file(artifact(config, "windows-train.bin"));
  const WindowsFile test_file = read_windows_file(artifact(config, "windows-test.bin"));
  require_hash(train_file.config_hash, config, "windows-train.bin");
  require_hash(test_file.config_hash, config, "windows-test.bin");

  const int features = static_cast<int>(train_file.column_names.size());
  const Normalizer normalizer = Normalizer::fit(train_file.windows);
  const std::vector<int> test_labels = labels_of(test_file.windows);

  std::ostringstream csv;
  csv << "# config_hash=" << hash << "\n";
  csv << "model,sensitivity,false_alarm_rate,tp,fp,fn,tn,final_train_loss\n";
  std::cout << "benchmark: " << config.run_name() << " ("
            << train_file.windows.size() << " train / " << test_file.windows.size()
            << " test windows)\n";
  std::cout << "  model          sensitivity  false_alarm_rate\n";
  for (std::size_t i = 0; i < model_families().size(); ++i) {
    const std::string& family = model_families()[i];
    std::unique_ptr<Model> model = make_model(family, config.stacking, features,
                                              config.hyper, config.seed_train);
    TrainConfig tc = config.train_config();
    const TrainResult trained = train(*model, train_file.windows, normalizer, tc);
    const std::vector<double> predictions =
        predict_all(*model, normalizer, test_file.windows);
    const ConfusionMatrix cm = confusion(predictions, test_labels, config.threshold);
    std::string sens = "undefined", far = "undefined";
    try {
      sens = format_double(sensitivity(cm));
    } catch (const UndefinedMetricError&) {
    }
    try {
      far = format_double(false_alarm_rate(cm));
    } catch (const UndefinedMetricError&) {
    }
    const double final_loss =
        trained.epoch_losses.empty() ? 0.0 : trained.epoch_losses.back();
    csv << family << ',' << sens << ',' << far << ',' << cm.tp << ',' << cm.fp << ','
        << cm.fn << ',' << cm.tn << ',' << format_double(final_loss) << "\n";
    std::cout << "  " << family << std::string(15 - family.size(), ' ') << sens
              << "  " << far << "\n";
  }
  write_file_bytes(artifact(config, "benchmark.csv"), csv.str());
}

void run_subcommand(const std::string& name, const RunConfig& config) {
  if (name == "generate") return cmd_generate(config);
  if (name == "prepare") return cmd_prepare(config);
  if (name == "train") return cmd_train(config);
  if (name == "evaluate") return cmd_evaluate(config);
  if (name == "explain") return cmd_explain(config);
  if (name == "benchmark") return cmd_benchmark(config);
  throw ConfigError("unknown subcommand: " + name);
}

}  // namespace intformer
