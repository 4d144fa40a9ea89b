#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "intformer/tensor.hpp"

namespace intformer {

// One 15-minute aggregate for a single turning movement (left/through/right).
// Max-variants dominate their averages by construction.
struct MovementStats {
  double avg_speed = 0.0;          // ASA, mph
  double max_speed = 0.0;          // ASM, mph
  double avg_travel_time = 0.0;    // TTA, seconds
  double max_travel_time = 0.0;    // TTM, seconds
  double avg_control_delay = 0.0;  // CDA, seconds
  double max_control_delay = 0.0;  // CDM, seconds
  double split_failure_count = 0.0;  // SFC, integer count
  double split_failure_pct = 0.0;    // SFP, percent 0-100
  double pct_on_green = 0.0;         // POG, percent 0-100

  void validate() const;
};

// The 9 movement metrics for each of the three movements: 27 scalars.
struct ApproachFeatureVector {
  MovementStats left;
  MovementStats through;
  MovementStats right;

  std::array<double, 27> flatten() const;
  static ApproachFeatureVector from_flat(const double* values);
  void validate() const;
};

struct WeatherRecord {
  double temperature = 0.0;        // Fahrenheit
  double relative_humidity = 0.0;  // percent 0-100
  double wind_speed = 0.0;         // mph
  double precipitation = 0.0;      // inches to hundredths
  double visibility = 0.0;         // miles
  double conditions = 0.0;         // 0 normal, 1 abnormal

  std::array<double, 6> flatten() const;
  static WeatherRecord from_flat(const double* values);
  void validate() const;
};

enum class Zone { kWithinIntersection, kApproach };
std::string zone_to_string(Zone zone);
Zone zone_from_string(const std::string& name);

// Physical approach arms, clockwise compass order.
enum class CompassLeg : int { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };
std::string leg_to_string(CompassLeg leg);
CompassLeg leg_from_string(const std::string& name);

struct IntersectionGeometry {
  std::string intersection_id;
  std::vector<CompassLeg> legs;  // clockwise order; 3 or 4 entries

  int leg_count() const { return static_cast<int>(legs.size()); }
  bool has_leg(CompassLeg leg) const;
  void validate() const;
};

struct IntersectionSnapshot {
  std::string intersection_id;
  std::int64_t timestamp = 0;  // minutes since dataset epoch; multiple of 15
  CompassLeg approach = CompassLeg::kNorth;
  ApproachFeatureVector features;
  WeatherRecord weather;

  void validate() const;
};

struct CrashEvent {
  std::string intersection_id;
  Zone zone = Zone::kWithinIntersection;
  std::optional<CompassLeg> approach;  // present iff zone == kApproach
  std::int64_t timestamp = 0;          // minutes since dataset epoch

  void validate() const;
};

// One stacked model observation: T consecutive 15-minute rows.
struct LabeledWindow {
  Tensor features;  // [T x F]
  int label = 0;
  std::string intersection_id;
  std::string approach_label;
  std::int64_t end_timestamp = 0;
};

// ---- Frozen feature ordering ------------------------------------------------
//
// Movement metrics appear in the order ASA, ASM, TTA, TTM, CDA, CDM, SFC,
// SFP, POG, each expanded L, T, R. Approach-zone rows append the six weather
// columns; within-intersection rows hold the 27 traffic columns for slots
// A, B, C, D and then weather. This ordering is a serialization contract.

inline constexpr std::size_t kTrafficFeaturesPerApproach = 27;
inline constexpr std::size_t kWeatherFeatureCount = 6;
inline constexpr std::size_t kApproachRowWidth = 33;
inline constexpr std::size_t kWithinRowWidth = 114;

const std::array<std::string, 9>& movement_metric_names();
const std::array<std::string, 3>& movement_names();
const std::vector<std::string>& approach_traffic_feature_names();  // 27
const std::vector<std::string>& weather_feature_names();           // 6
const std::vector<std::string>& approach_row_feature_names();      // 33
const std::vector<std::string>& within_row_feature_names();        // 114

// 27 traffic + 6 weather scalars in the documented fixed order.
std::vector<double> flatten_features(const IntersectionSnapshot& snapshot);
// Inverse of flatten_features for the feature payload (ids/time not included).
void unflatten_features(const std::vector<double>& values, ApproachFeatureVector& features,
                        WeatherRecord& weather);

}  // namespace intformer
