#include "intformer/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "intformer/errors.hpp"
#include "intformer/rng.hpp"
#include "intformer/util.hpp"

namespace intformer {

namespace {
constexpr std::int64_t kStepMinutes = 15;
constexpr std::int64_t kExclusionMinutes = 120;

std::string stream_key(const FormattedRow& row, Zone zone) {
  if (zone == Zone::kApproach) {
    return row.intersection_id + "#" + leg_to_string(row.reference);
  }
  return row.intersection_id;
}

std::pair<std::int64_t, std::int64_t> preceding_steps(std::int64_t event_minute) {
  std::int64_t s1 = (event_minute % kStepMinutes == 0)
                        ? event_minute - kStepMinutes
                        : event_minute - event_minute % kStepMinutes;
  return {s1, s1 - kStepMinutes};
}
}  // namespace

NomenclatureMap NomenclatureMap::from_geometry(const IntersectionGeometry& geometry,
                                               CompassLeg reference) {
  if (!geometry.has_leg(reference)) {
    throw ConfigError("reference approach " + leg_to_string(reference) +
                      " is not a leg of " + geometry.intersection_id);
  }
  NomenclatureMap map;
  map.reference = reference;
  const int a = static_cast<int>(reference);
  // A = reference, B = left arm (counterclockwise neighbor), C = opposite,
  // D = right arm.
  const std::array<int, 4> physical = {a, (a + 3) % 4, (a + 2) % 4, (a + 1) % 4};
  for (std::size_t slot = 0; slot < 4; ++slot) {
    const CompassLeg leg = static_cast<CompassLeg>(physical[slot]);
    if (geometry.has_leg(leg)) map.slots[slot] = leg;
  }
  return map;
}

FormattedTable format_within_intersection(
    const std::vector<IntersectionSnapshot>& snapshots,
    const std::vector<IntersectionGeometry>& geometries) {
  // (intersection, timestamp) -> leg -> snapshot index
  std::map<std::pair<std::string, std::int64_t>, std::array<int, 4>> grouped;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    const auto& s = snapshots[i];
    auto& slot = grouped[{s.intersection_id, s.timestamp}];
    static const std::array<int, 4> empty = {-1, -1, -1, -1};
    if (slot == std::array<int, 4>{0, 0, 0, 0}) slot = empty;
    slot[static_cast<std::size_t>(s.approach)] = static_cast<int>(i);
  }

  std::map<std::string, const IntersectionGeometry*> geometry_by_id;
  for (const auto& g : geometries) geometry_by_id[g.intersection_id] = &g;

  FormattedTable table;
  table.zone = Zone::kWithinIntersection;
  table.column_names = within_row_feature_names();
  table.rows.reserve(grouped.size() * 4);

  for (const auto& [key, legs] : grouped) {
    const auto& [intersection_id, timestamp] = key;
    auto git = geometry_by_id.find(intersection_id);
    if (git == geometry_by_id.end()) {
      throw ConfigError("no geometry for intersection " + intersection_id);
    }
    const IntersectionGeometry& geometry = *git->second;
    for (CompassLeg leg : geometry.legs) {
      if (legs[static_cast<std::size_t>(leg)] < 0) {
        throw GapError("missing snapshot for " + intersection_id + " approach " +
                       leg_to_string(leg) + " at " + iso8601_from_minutes(timestamp));
      }
    }
    for (CompassLeg reference : geometry.legs) {
      const NomenclatureMap nomenclature =
          NomenclatureMap::from_geometry(geometry, reference);
      FormattedRow row;
      row.intersection_id = intersection_id;
      row.reference = reference;
      row.timestamp = timestamp;
      row.values.assign(kWithinRowWidth, 0.0);
      for (std::size_t slot = 0; slot < 4; ++slot) {
        if (!nomenclature.slots[slot].has_value()) {
          row.slot_present[slot] = false;
          continue;
        }
        const int snap_index =
            legs[static_cast<std::size_t>(*nomenclature.slots[slot])];
        const auto traffic = snapshots[static_cast<std::size_t>(snap_index)]
                                 .features.flatten();
        std::copy(traffic.begin(), traffic.end(),
                  row.values.begin() +
                      static_cast<std::ptrdiff_t>(slot * kTrafficFeaturesPerApproach));
      }
      const int any_index = legs[static_cast<std::size_t>(geometry.legs.front())];
      const auto weather =
          snapshots[static_cast<std::size_t>(any_index)].weather.flatten();
      std::copy(weather.begin(), weather.end(),
                row.values.begin() + static_cast<std::ptrdiff_t>(
                                         4 * kTrafficFeaturesPerApproach));
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

FormattedTable format_approach(const std::vector<IntersectionSnapshot>& snapshots) {
  FormattedTable table;
  table.zone = Zone::kApproach;
  table.column_names = approach_row_feature_names();
  table.rows.reserve(snapshots.size());
  for (const auto& s : snapshots) {
    FormattedRow row;
    row.intersection_id = s.intersection_id;
    row.reference = s.approach;
    row.timestamp = s.timestamp;
    row.values = flatten_features(s);
    table.rows.push_back(std::move(row));
  }
  std::sort(table.rows.begin(), table.rows.end(),
            [](const FormattedRow& a, const FormattedRow& b) {
              if (a.intersection_id != b.intersection_id) {
                return a.intersection_id < b.intersection_id;
              }
              if (a.reference != b.reference) return a.reference < b.reference;
              return a.timestamp < b.timestamp;
            });
  return table;
}

CrashIndexResult index_crashes(const FormattedTable& table,
                               const std::vector<CrashEvent>& crashes, Zone zone) {
  CrashIndexResult result;
  result.labels.assign(table.rows.size(), 0);

  std::unordered_map<std::string, std::vector<std::size_t>> rows_at;
  rows_at.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    std::string key = row.intersection_id + "@" + std::to_string(row.timestamp);
    if (zone == Zone::kApproach) key += "#" + leg_to_string(row.reference);
    rows_at[key].push_back(i);
  }

  for (const CrashEvent& crash : crashes) {
    if (crash.zone != zone) continue;
    crash.validate();
    const auto [s1, s2] = preceding_steps(crash.timestamp);
    bool matched = false;
    for (std::int64_t ts : {s1, s2}) {
      std::string key = crash.intersection_id + "@" + std::to_string(ts);
      if (zone == Zone::kApproach) key += "#" + leg_to_string(*crash.approach);
      auto it = rows_at.find(key);
      if (it == rows_at.end()) continue;
      matched = true;
      for (std::size_t i : it->second) result.labels[i] = 1;
    }
    if (!matched) ++result.ignored_crashes;
  }
  return result;
}

void exclude_post_crash(FormattedTable& table, std::vector<int>& labels) {
  if (labels.size() != table.rows.size()) {
    throw DimensionError("labels are not aligned with table rows");
  }
  std::unordered_set<std::string> excluded;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (labels[i] != 1) continue;
    const auto& row = table.rows[i];
    const std::string stream = stream_key(row, table.zone);
    for (std::int64_t dt = kStepMinutes; dt <= kExclusionMinutes; dt += kStepMinutes) {
      excluded.insert(stream + "@" + std::to_string(row.timestamp + dt));
    }
  }
  std::vector<FormattedRow> kept_rows;
  std::vector<int> kept_labels;
  kept_rows.reserve(table.rows.size());
  kept_labels.reserve(labels.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const bool drop =
        labels[i] != 1 &&
        excluded.count(stream_key(row, table.zone) + "@" +
                       std::to_string(row.timestamp)) > 0;
    if (drop) continue;
    kept_rows.push_back(row);
    kept_labels.push_back(labels[i]);
  }
  table.rows = std::move(kept_rows);
  labels = std::move(kept_labels);
}

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("pearson_r length mismatch");
  if (x.size() < 2) throw DimensionError("pearson_r requires length >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

Tensor correlation_matrix(const FormattedTable& table) {
  const std::size_t f = table.width();
  const std::size_t n = table.rows.size();
  if (n < 2) throw DimensionError("correlation_matrix requires >= 2 rows");
  // Standardize columns, then accumulate dot products.
  std::vector<double> mean(f, 0.0), scale(f, 0.0);
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < f; ++j) mean[j] += row.values[j];
  }
  for (std::size_t j = 0; j < f; ++j) mean[j] /= static_cast<double>(n);
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < f; ++j) {
      const double d = row.values[j] - mean[j];
      scale[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < f; ++j) {
    scale[j] = scale[j] > 0.0 ? 1.0 / std::sqrt(scale[j]) : 0.0;
  }
  Tensor corr({f, f});
  std::vector<double> z(f);
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < f; ++j) {
      z[j] = (row.values[j] - mean[j]) * scale[j];
    }
    for (std::size_t a = 0; a < f; ++a) {
      if (z[a] == 0.0) continue;
      double* out = corr.data().data() + a * f;
      for (std::size_t b = a; b < f; ++b) out[b] += z[a] * z[b];
    }
  }
  for (std::size_t a = 0; a < f; ++a) {
    corr.at(a, a) = scale[a] > 0.0 ? 1.0 : 0.0;
    for (std::size_t b = a + 1; b < f; ++b) {
      corr.at(b, a) = corr.at(a, b);
    }
  }
  return corr;
}

namespace {

struct TreeAccumulator {
  const std::vector<FormattedRow>* rows;
  const std::vector<int>* labels;
  std::vector<double>* importance;
  double total_samples;
  int max_features;
  int max_depth;
  int min_samples_split;

  static double gini(std::size_t positive, std::size_t count) {
    if (count == 0) return 0.0;
    const double p = static_cast<double>(positive) / static_cast<double>(count);
    return 2.0 * p * (1.0 - p);
  }

  void grow(std::vector<std::size_t>& indices, int depth, DetRng& rng) {
    const std::size_t n = indices.size();
    std::size_t positive = 0;
    for (std::size_t i : indices) positive += static_cast<std::size_t>((*labels)[i]);
    if (positive == 0 || positive == n) return;
    if (n < static_cast<std::size_t>(min_samples_split)) return;
    if (max_depth > 0 && depth >= max_depth) return;

    const std::size_t f = (*rows)[0].values.size();
    // Sample candidate features without replacement.
    std::vector<std::size_t> candidates(f);
    std::iota(candidates.begin(), candidates.end(), 0);
    for (int c = 0; c < max_features && static_cast<std::size_t>(c) < f; ++c) {
      const std::size_t pick =
          static_cast<std::size_t>(c) +
          static_cast<std::size_t>(rng.below(f - static_cast<std::size_t>(c)));
      std::swap(candidates[static_cast<std::size_t>(c)], candidates[pick]);
    }

    const double parent_gini = gini(positive, n);
    double best_decrease = 0.0;
    std::size_t best_feature = f;
    double best_threshold = 0.0;
    for (int c = 0; c < max_features && static_cast<std::size_t>(c) < f; ++c) {
      const std::size_t feature = candidates[static_cast<std::size_t>(c)];
      double lo = (*rows)[indices[0]].values[feature];
      double hi = lo;
      for (std::size_t i : indices) {
        const double v = (*rows)[i].values[feature];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (!(hi > lo)) continue;
      const double threshold = rng.uniform(lo, hi);
      std::size_t left_n = 0, left_pos = 0;
      for (std::size_t i : indices) {
        if ((*rows)[i].values[feature] <= threshold) {
          ++left_n;
          left_pos += static_cast<std::size_t>((*labels)[i]);
        }
      }
      if (left_n == 0 || left_n == n) continue;
      const std::size_t right_n = n - left_n;
      const std::size_t right_pos = positive - left_pos;
      const double child =
          (static_cast<double>(left_n) * gini(left_pos, left_n) +
           static_cast<double>(right_n) * gini(right_pos, right_n)) /
          static_cast<double>(n);
      const double decrease = parent_gini - child;
      if (decrease > best_decrease) {
        best_decrease = decrease;
        best_feature = feature;
        best_threshold = threshold;
      }
    }
    if (best_feature == f) return;

    (*importance)[best_feature] +=
        static_cast<double>(n) / total_samples * best_decrease;

    std::vector<std::size_t> left, right;
    left.reserve(n);
    right.reserve(n);
    for (std::size_t i : indices) {
      if ((*rows)[i].values[best_feature] <= best_threshold) {
        left.push_back(i);
      } else {
        right.push_back(i);
      }
    }
    indices.clear();
    indices.shrink_to_fit();
    grow(left, depth + 1, rng);
    grow(right, depth + 1, rng);
  }
};

}  // namespace

std::vector<double> extra_trees_importance(const FormattedTable& table,
                                           const std::vector<int>& labels,
                                           const ExtraTreesConfig& config) {
  if (labels.size() != table.rows.size()) {
    throw DimensionError("labels are not aligned with table rows");
  }
  if (table.rows.empty()) throw DimensionError("extra_trees_importance on empty table");
  const std::size_t f = table.width();
  bool has_pos = false, has_neg = false;
  for (int label : labels) {
    has_pos |= label == 1;
    has_neg |= label == 0;
  }
  if (!has_pos || !has_neg) {
    throw DegenerateLabelsError("extra-trees importance requires both classes");
  }

  int max_features = config.max_features;
  if (max_features <= 0) {
    max_features = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(f))));
  }
  max_features = std::min(max_features, static_cast<int>(f));

  std::vector<double> importance(f, 0.0);
  for (int t = 0; t < config.tree_count; ++t) {
    DetRng rng(derive_seed(config.seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> indices(table.rows.size());
    std::iota(indices.begin(), indices.end(), 0);
    TreeAccumulator acc{&table.rows,
                        &labels,
                        &importance,
                        static_cast<double>(table.rows.size()),
                        max_features,
                        config.max_depth,
                        config.min_samples_split};
    acc.grow(indices, 0, rng);
  }
  const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
  if (total > 0.0) {
    for (double& v : importance) v /= total;
  }
  return importance;
}

SelectionResult select_features(const std::vector<std::string>& feature_names,
                                const std::vector<double>& importances,
                                const Tensor& correlation, double threshold) {
  const std::size_t f = feature_names.size();
  if (importances.size() != f) {
    throw DimensionError("importances not aligned with feature names");
  }
  if (correlation.rank() != 2 || correlation.shape()[0] != f ||
      correlation.shape()[1] != f) {
    throw DimensionError("correlation matrix not aligned with importance vector");
  }
  SelectionResult result;
  result.feature_names = feature_names;
  result.importances = importances;
  result.correlation = correlation;
  result.threshold = threshold;
  result.kept.assign(f, false);

  std::vector<std::size_t> order(f);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return importances[a] > importances[b];
  });

  std::vector<std::size_t> kept_so_far;
  for (std::size_t j : order) {
    bool ok = true;
    for (std::size_t k : kept_so_far) {
      if (std::abs(correlation.at(j, k)) > threshold) {
        ok = false;
        break;
      }
    }
    if (ok) {
      result.kept[j] = true;
      kept_so_far.push_back(j);
    }
  }
  for (std::size_t j = 0; j < f; ++j) {
    if (result.kept[j]) result.kept_indices.push_back(j);
  }
  return result;
}

FormattedTable apply_selection(const FormattedTable& table,
                               const SelectionResult& selection) {
  FormattedTable out;
  out.zone = table.zone;
  for (std::size_t j : selection.kept_indices) {
    out.column_names.push_back(table.column_names[j]);
  }
  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    FormattedRow narrow;
    narrow.intersection_id = row.intersection_id;
    narrow.reference = row.reference;
    narrow.timestamp = row.timestamp;
    narrow.slot_present = row.slot_present;
    narrow.values.reserve(selection.kept_indices.size());
    for (std::size_t j : selection.kept_indices) narrow.values.push_back(row.values[j]);
    out.rows.push_back(std::move(narrow));
  }
  return out;
}

std::vector<LabeledWindow> stack_windows(const FormattedTable& table,
                                         const std::vector<int>& labels, int timesteps) {
  if (timesteps < 2 || timesteps > 4) {
    throw ConfigError("stacking supports 2, 3, or 4 timesteps");
  }
  if (labels.size() != table.rows.size()) {
    throw DimensionError("labels are not aligned with table rows");
  }
  const std::size_t f = table.width();

  // Group row indices per stream: same intersection and reference approach.
  std::map<std::string, std::vector<std::size_t>> streams;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    streams[row.intersection_id + "#" + leg_to_string(row.reference)].push_back(i);
  }

  std::vector<LabeledWindow> windows;
  for (auto& [key, indices] : streams) {
    std::stable_sort(indices.begin(), indices.end(), [&](std::size_t a, std::size_t b) {
      return table.rows[a].timestamp < table.rows[b].timestamp;
    });
    for (std::size_t i = 1; i < indices.size(); ++i) {
      if (table.rows[indices[i]].timestamp == table.rows[indices[i - 1]].timestamp) {
        throw ConfigError("duplicate timestep in stream " + key);
      }
    }
    if (indices.size() < static_cast<std::size_t>(timesteps)) continue;
    for (std::size_t end = static_cast<std::size_t>(timesteps) - 1; end < indices.size();
         ++end) {
      const std::size_t start = end - static_cast<std::size_t>(timesteps) + 1;
      bool contiguous = true;
      for (std::size_t i = start + 1; i <= end; ++i) {
        if (table.rows[indices[i]].timestamp !=
            table.rows[indices[i - 1]].timestamp + kStepMinutes) {
          contiguous = false;
          break;
        }
      }
      if (!contiguous) continue;
      LabeledWindow window;
      window.features = Tensor({static_cast<std::size_t>(timesteps), f});
      for (std::size_t i = start; i <= end; ++i) {
        const auto& row = table.rows[indices[i]];
        std::copy(row.values.begin(), row.values.end(),
                  window.features.data().begin() +
                      static_cast<std::ptrdiff_t>((i - start) * f));
      }
      const auto& last = table.rows[indices[end]];
      window.label = labels[indices[end]];
      window.intersection_id = last.intersection_id;
      window.approach_label = leg_to_string(last.reference);
      window.end_timestamp = last.timestamp;
      windows.push_back(std::move(window));
    }
  }
  return windows;
}

SplitResult split_train_test(const std::vector<LabeledWindow>& windows,
                             double test_fraction, std::uint64_t seed, bool temporal) {
  if (windows.size() < 4) throw ConfigError("split requires at least 4 windows");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
  const std::size_t n = windows.size();
  const std::size_t n_test =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));

  SplitResult result;
  if (temporal) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return windows[a].end_timestamp < windows[b].end_timestamp;
    });
    for (std::size_t i = 0; i < n; ++i) {
      (i < n - n_test ? result.train : result.test).push_back(windows[order[i]]);
    }
    return result;
  }

  // Stratified: per-class proportional shares, remainders to the classes
  // with the largest fractional part so the global test count is exact.
  std::vector<std::size_t> class_of[2];
  for (std::size_t i = 0; i < n; ++i) {
    class_of[windows[i].label == 1 ? 1 : 0].push_back(i);
  }
  double quota[2];
  std::size_t take[2];
  std::size_t assigned = 0;
  for (int c = 0; c < 2; ++c) {
    quota[c] = static_cast<double>(class_of[c].size()) * test_fraction;
    take[c] = static_cast<std::size_t>(std::floor(quota[c]));
    assigned += take[c];
  }
  while (assigned < n_test) {
    const int pick =
        (quota[0] - std::floor(quota[0])) >= (quota[1] - std::floor(quota[1])) ? 0 : 1;
    if (take[pick] < class_of[pick].size()) {
      ++take[pick];
    } else {
      ++take[1 - pick];
    }
    ++assigned;
    quota[pick] = std::floor(quota[pick]);  // spent its remainder
  }

  std::vector<char> in_test(n, 0);
  for (int c = 0; c < 2; ++c) {
    DetRng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    std::vector<std::size_t> shuffled = class_of[c];
    rng.shuffle(shuffled);
    for (std::size_t i = 0; i < take[c] && i < shuffled.size(); ++i) {
      in_test[shuffled[i]] = 1;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    (in_test[i] ? result.test : result.train).push_back(windows[i]);
  }
  return result;
}

std::vector<LabeledWindow> smote_resample(const std::vector<LabeledWindow>& train,
                                          int k, std::uint64_t seed) {
  std::vector<std::size_t> minority, majority;
  for (std::size_t i = 0; i < train.size(); ++i) {
    (train[i].label == 1 ? minority : majority).push_back(i);
  }
  int minority_label = 1;
  if (minority.size() > majority.size()) {
    std::swap(minority, majority);
    minority_label = 0;
  }
  if (minority.empty()) {
    throw ResamplingError("SMOTE requires at least one minority sample");
  }
  std::vector<LabeledWindow> out = train;
  const std::size_t needed = majority.size() - minority.size();
  if (needed == 0) return out;

  const std::size_t dim = train[minority[0]].features.size();
  const auto& window_shape = train[minority[0]].features.shape();

  int k_eff = std::min<int>(k, static_cast<int>(minority.size()) - 1);
  k_eff = std::max(k_eff, 1);

  // k nearest minority neighbors (Euclidean on flattened windows).
  const std::size_t m = minority.size();
  std::vector<std::vector<std::size_t>> neighbors(m);
  if (m > 1) {
    for (std::size_t a = 0; a < m; ++a) {
      std::vector<std::pair<double, std::size_t>> dists;
      dists.reserve(m - 1);
      const auto& xa = train[minority[a]].features.data();
      for (std::size_t b = 0; b < m; ++b) {
        if (b == a) continue;
        const auto& xb = train[minority[b]].features.data();
        double d2 = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
          const double d = xa[j] - xb[j];
          d2 += d * d;
        }
        dists.emplace_back(d2, b);
      }
      std::stable_sort(dists.begin(), dists.end(),
                       [](const auto& p, const auto& q) { return p.first < q.first; });
      for (int i = 0; i < k_eff && static_cast<std::size_t>(i) < dists.size(); ++i) {
        neighbors[a].push_back(dists[static_cast<std::size_t>(i)].second);
      }
    }
  }

  DetRng rng(seed);
  for (std::size_t s = 0; s < needed; ++s) {
    const std::size_t base = static_cast<std::size_t>(rng.below(m));
    const LabeledWindow& x = train[minority[base]];
    LabeledWindow synthetic;
    synthetic.label = minority_label;
    synthetic.intersection_id = x.intersection_id;
    synthetic.approach_label = x.approach_label;
    synthetic.end_timestamp = x.end_timestamp;
    if (neighbors[base].empty()) {
      synthetic.features = x.features;
    } else {
      const std::size_t pick = static_cast<std::size_t>(
          rng.below(static_cast<std::uint64_t>(neighbors[base].size())));
      const LabeledWindow& nn = train[minority[neighbors[base][pick]]];
      const double u = rng.uniform();
      Tensor blend(window_shape);
      for (std::size_t j = 0; j < dim; ++j) {
        blend[j] = x.features[j] + u * (nn.features[j] - x.features[j]);
      }
      synthetic.features = std::move(blend);
    }
    out.push_back(std::move(synthetic));
  }
  return out;
}

}  // namespace intformer
