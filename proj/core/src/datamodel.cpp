#include "intformer/datamodel.hpp"

#include <cmath>

#include "intformer/errors.hpp"

namespace intformer {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(std::string("invariant violated: ") + what);
}

double metric_value(const MovementStats& s, std::size_t metric) {
  switch (metric) {
    case 0: return s.avg_speed;
    case 1: return s.max_speed;
    case 2: return s.avg_travel_time;
    case 3: return s.max_travel_time;
    case 4: return s.avg_control_delay;
    case 5: return s.max_control_delay;
    case 6: return s.split_failure_count;
    case 7: return s.split_failure_pct;
    case 8: return s.pct_on_green;
  }
  throw DimensionError("metric index out of range");
}

void set_metric_value(MovementStats& s, std::size_t metric, double v) {
  switch (metric) {
    case 0: s.avg_speed = v; return;
    case 1: s.max_speed = v; return;
    case 2: s.avg_travel_time = v; return;
    case 3: s.max_travel_time = v; return;
    case 4: s.avg_control_delay = v; return;
    case 5: s.max_control_delay = v; return;
    case 6: s.split_failure_count = v; return;
    case 7: s.split_failure_pct = v; return;
    case 8: s.pct_on_green = v; return;
  }
  throw DimensionError("metric index out of range");
}

}  // namespace

void MovementStats::validate() const {
  require(avg_speed >= 0.0 && max_speed >= avg_speed, "max_speed >= avg_speed >= 0");
  require(avg_travel_time >= 0.0 && max_travel_time >= avg_travel_time,
          "max_travel_time >= avg_travel_time >= 0");
  require(avg_control_delay >= 0.0 && max_control_delay >= avg_control_delay,
          "max_control_delay >= avg_control_delay >= 0");
  require(split_failure_count >= 0.0 &&
              split_failure_count == std::floor(split_failure_count),
          "split_failure_count is a nonnegative integer");
  require(split_failure_pct >= 0.0 && split_failure_pct <= 100.0, "sfp in [0,100]");
  require(pct_on_green >= 0.0 && pct_on_green <= 100.0, "pog in [0,100]");
}

std::array<double, 27> ApproachFeatureVector::flatten() const {
  std::array<double, 27> out{};
  const MovementStats* movements[3] = {&left, &through, &right};
  std::size_t idx = 0;
  for (std::size_t metric = 0; metric < 9; ++metric) {
    for (std::size_t m = 0; m < 3; ++m) {
      out[idx++] = metric_value(*movements[m], metric);
    }
  }
  return out;
}

ApproachFeatureVector ApproachFeatureVector::from_flat(const double* values) {
  ApproachFeatureVector v;
  MovementStats* movements[3] = {&v.left, &v.through, &v.right};
  std::size_t idx = 0;
  for (std::size_t metric = 0; metric < 9; ++metric) {
    for (std::size_t m = 0; m < 3; ++m) {
      set_metric_value(*movements[m], metric, values[idx++]);
    }
  }
  return v;
}

void ApproachFeatureVector::validate() const {
  left.validate();
  through.validate();
  right.validate();
}

std::array<double, 6> WeatherRecord::flatten() const {
  return {temperature, relative_humidity, wind_speed, precipitation, visibility,
          conditions};
}

WeatherRecord WeatherRecord::from_flat(const double* v) {
  return WeatherRecord{v[0], v[1], v[2], v[3], v[4], v[5]};
}

void WeatherRecord::validate() const {
  require(relative_humidity >= 0.0 && relative_humidity <= 100.0, "humidity in [0,100]");
  require(visibility >= 0.0, "visibility >= 0");
  require(conditions == 0.0 || conditions == 1.0, "conditions binary");
}

std::string zone_to_string(Zone zone) {
  return zone == Zone::kWithinIntersection ? "within_intersection" : "approach";
}

Zone zone_from_string(const std::string& name) {
  if (name == "within_intersection") return Zone::kWithinIntersection;
  if (name == "approach") return Zone::kApproach;
  throw ConfigError("unknown zone: " + name);
}

std::string leg_to_string(CompassLeg leg) {
  switch (leg) {
    case CompassLeg::kNorth: return "N";
    case CompassLeg::kEast: return "E";
    case CompassLeg::kSouth: return "S";
    case CompassLeg::kWest: return "W";
  }
  throw ConfigError("invalid leg");
}

CompassLeg leg_from_string(const std::string& name) {
  if (name == "N") return CompassLeg::kNorth;
  if (name == "E") return CompassLeg::kEast;
  if (name == "S") return CompassLeg::kSouth;
  if (name == "W") return CompassLeg::kWest;
  throw ConfigError("unknown approach leg: " + name);
}

bool IntersectionGeometry::has_leg(CompassLeg leg) const {
  for (CompassLeg l : legs) {
    if (l == leg) return true;
  }
  return false;
}

void IntersectionGeometry::validate() const {
  require(legs.size() == 3 || legs.size() == 4, "leg count in {3,4}");
  for (std::size_t i = 0; i < legs.size(); ++i) {
    for (std::size_t j = i + 1; j < legs.size(); ++j) {
      require(legs[i] != legs[j], "legs are distinct");
    }
  }
}

void IntersectionSnapshot::validate() const {
  require(timestamp % 15 == 0, "timestamp aligned to 15 minutes");
  features.validate();
  weather.validate();
}

void CrashEvent::validate() const {
  if (zone == Zone::kWithinIntersection) {
    require(!approach.has_value(), "within-intersection crash carries no approach");
  } else {
    require(approach.has_value(), "approach crash names its approach");
  }
}

const std::array<std::string, 9>& movement_metric_names() {
  static const std::array<std::string, 9> names = {"ASA", "ASM", "TTA", "TTM", "CDA",
                                                   "CDM", "SFC", "SFP", "POG"};
  return names;
}

const std::array<std::string, 3>& movement_names() {
  static const std::array<std::string, 3> names = {"L", "T", "R"};
  return names;
}

const std::vector<std::string>& approach_traffic_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    out.reserve(kTrafficFeaturesPerApproach);
    for (const std::string& metric : movement_metric_names()) {
      for (const std::string& movement : movement_names()) {
        out.push_back(metric + "_" + movement);
      }
    }
    return out;
  }();
  return names;
}

const std::vector<std::string>& weather_feature_names() {
  static const std::vector<std::string> names = {
      "temperature", "relative_humidity", "wind_speed",
      "precipitation", "visibility", "conditions"};
  return names;
}

const std::vector<std::string>& approach_row_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out = approach_traffic_feature_names();
    const auto& weather = weather_feature_names();
    out.insert(out.end(), weather.begin(), weather.end());
    return out;
  }();
  return names;
}

const std::vector<std::string>& within_row_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    out.reserve(kWithinRowWidth);
    static const char* slots[4] = {"A", "B", "C", "D"};
    for (const char* slot : slots) {
      for (const std::string& name : approach_traffic_feature_names()) {
        out.push_back(name + "_" + slot);
      }
    }
    const auto& weather = weather_feature_names();
    out.insert(out.end(), weather.begin(), weather.end());
    return out;
  }();
  return names;
}

std::vector<double> flatten_features(const IntersectionSnapshot& snapshot) {
  std::vector<double> out;
  out.reserve(kApproachRowWidth);
  const auto traffic = snapshot.features.flatten();
  out.insert(out.end(), traffic.begin(), traffic.end());
  const auto weather = snapshot.weather.flatten();
  out.insert(out.end(), weather.begin(), weather.end());
  return out;
}

void unflatten_features(const std::vector<double>& values,
                        ApproachFeatureVector& features, WeatherRecord& weather) {
  if (values.size() != kApproachRowWidth) {
    throw DimensionError("unflatten_features expects 33 values");
  }
  features = ApproachFeatureVector::from_flat(values.data());
  weather = WeatherRecord::from_flat(values.data() + kTrafficFeaturesPerApproach);
}

}  // namespace intformer
