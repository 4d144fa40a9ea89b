#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "intformer/datamodel.hpp"
#include "intformer/tensor.hpp"

namespace intformer {

// Relabeling of physical legs around a reference approach: A is the approach
// under consideration, B the arm on its left (counterclockwise neighbor),
// C opposite, D on its right. Slots for absent arms are empty.
struct NomenclatureMap {
  CompassLeg reference = CompassLeg::kNorth;
  std::array<std::optional<CompassLeg>, 4> slots;  // A, B, C, D

  static NomenclatureMap from_geometry(const IntersectionGeometry& geometry,
                                       CompassLeg reference);
};

struct FormattedRow {
  std::string intersection_id;
  CompassLeg reference = CompassLeg::kNorth;  // 'A' approach
  std::int64_t timestamp = 0;                 // minutes since epoch
  std::vector<double> values;
  std::array<bool, 4> slot_present = {true, true, true, true};
};

struct FormattedTable {
  Zone zone = Zone::kApproach;
  std::vector<std::string> column_names;
  std::vector<FormattedRow> rows;

  std::size_t width() const { return column_names.size(); }
};

// One row per (intersection, reference approach, timestep), width 114:
// 27 traffic features for slots A..D (zero-filled when the arm is absent)
// plus 6 weather columns. Missing leg snapshots raise GapError.
FormattedTable format_within_intersection(
    const std::vector<IntersectionSnapshot>& snapshots,
    const std::vector<IntersectionGeometry>& geometries);

// One row per snapshot, width 33, in flatten_features order.
FormattedTable format_approach(const std::vector<IntersectionSnapshot>& snapshots);

struct CrashIndexResult {
  std::vector<int> labels;  // aligned with table rows
  int ignored_crashes = 0;  // events outside the covered time range
};

// Labels the two aligned timesteps preceding each crash of the given zone.
CrashIndexResult index_crashes(const FormattedTable& table,
                               const std::vector<CrashEvent>& crashes, Zone zone);

// Drops rows within (t, t+2h] of every labeled timestep t in the same
// stream; labeled rows themselves are always retained.
void exclude_post_crash(FormattedTable& table, std::vector<int>& labels);

// Product-moment correlation; defined as 0 when either series is constant.
double pearson_r(const std::vector<double>& x, const std::vector<double>& y);

// Column-by-column absolute correlation matrix of the table's features.
Tensor correlation_matrix(const FormattedTable& table);

struct ExtraTreesConfig {
  int tree_count = 100;
  int max_features = 0;  // 0 = floor(sqrt(feature count)), min 1
  int max_depth = 0;     // 0 = unbounded
  int min_samples_split = 2;
  std::uint64_t seed = 0;
};

// Gini importance from a forest of extremely randomized trees (uniform
// random thresholds on random feature subsets); normalized to sum to 1.
std::vector<double> extra_trees_importance(const FormattedTable& table,
                                           const std::vector<int>& labels,
                                           const ExtraTreesConfig& config);

struct SelectionResult {
  std::vector<std::string> feature_names;  // full column roster
  std::vector<double> importances;         // aligned with feature_names
  std::vector<bool> kept;                  // aligned with feature_names
  std::vector<std::size_t> kept_indices;   // ascending column order
  Tensor correlation;                      // matrix used for the decision
  double threshold = 0.5;
};

// Greedy by descending importance (ties broken by column order); a feature
// is kept iff |r| <= threshold against every feature already kept.
SelectionResult select_features(const std::vector<std::string>& feature_names,
                                const std::vector<double>& importances,
                                const Tensor& correlation, double threshold = 0.5);

// Narrows a table to the kept columns, preserving row order and provenance.
FormattedTable apply_selection(const FormattedTable& table,
                               const SelectionResult& selection);

// Sliding windows of T consecutive 15-minute rows within one stream
// (same intersection and reference approach). The window label is the label
// of the final timestep; windows spanning a time gap are dropped.
std::vector<LabeledWindow> stack_windows(const FormattedTable& table,
                                         const std::vector<int>& labels, int timesteps);

struct SplitResult {
  std::vector<LabeledWindow> train;
  std::vector<LabeledWindow> test;
};

// Seeded random split, stratified by label (largest-remainder allocation so
// the test count is exactly round(n * test_fraction)). Temporal mode keeps
// the latest windows for test instead.
SplitResult split_train_test(const std::vector<LabeledWindow>& windows,
                             double test_fraction, std::uint64_t seed,
                             bool temporal = false);

// SMOTE on flattened windows: each synthetic minority sample lies on the
// segment between a minority sample and one of its k nearest minority
// neighbors. Output has exactly equal class counts.
std::vector<LabeledWindow> smote_resample(const std::vector<LabeledWindow>& train,
                                          int k, std::uint64_t seed);

}  // namespace intformer
