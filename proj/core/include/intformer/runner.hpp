#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "intformer/models.hpp"
#include "intformer/trainer.hpp"

namespace intformer {

// Flat, hashable run configuration. Every seed is explicit; the zone/T
// combination names the run (e.g. within_intersection/II).
struct RunConfig {
  // Generation
  int four_leg_intersections = 6;
  int three_leg_intersections = 2;
  int days = 365;
  int crash_total = 462;
  int crash_ratio_within = 338;
  int crash_ratio_approach = 124;
  double signal_strength = 1.0;
  double diurnal_amplitude = 0.3;
  std::string calibration_path;  // empty: built-in calibration

  // Preparation
  std::string zone = "within_intersection";
  int stacking = 2;
  double correlation_threshold = 0.5;
  int selection_trees = 100;
  int selection_max_depth = 0;
  int selection_max_features = 0;
  double test_fraction = 0.25;
  bool temporal_split = false;
  int smote_k = 5;

  // Model + training
  std::string model = "intformer";
  ModelHyper hyper;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 10;
  int early_stop_patience = 0;
  double threshold = 0.5;

  // Explanation
  int explain_windows = 10;
  int explain_permutations = 200;

  // Seeds
  std::uint64_t seed_generation = 1;
  std::uint64_t seed_selection = 2;
  std::uint64_t seed_split = 3;
  std::uint64_t seed_smote = 4;
  std::uint64_t seed_train = 5;
  std::uint64_t seed_explain = 6;

  std::string out_dir = "out";

  void validate() const;
  std::string run_name() const;  // e.g. "within_intersection/II"
  TrainConfig train_config() const;
};

nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

// FNV-1a over the canonical (sorted-key, compact) JSON rendering.
std::string config_hash(const RunConfig& config);

// Loads a config file and applies `key=value` seed/field overrides.
RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides = {});

// Subcommand implementations. Each writes its artifacts under
// config.out_dir and throws a typed error on failure; DependencyError names
// the subcommand that must run first.
void cmd_generate(const RunConfig& config);
void cmd_prepare(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_explain(const RunConfig& config);
void cmd_benchmark(const RunConfig& config);

void run_subcommand(const std::string& name, const RunConfig& config);

}  // namespace intformer
