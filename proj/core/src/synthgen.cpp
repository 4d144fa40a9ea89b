#include "intformer/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "intformer/errors.hpp"
#include "intformer/rng.hpp"
#include "intformer/util.hpp"

namespace intformer {

namespace {

constexpr int kStepsPerDay = 96;
constexpr int kStepMinutes = 15;

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Mean of a normal(mu, sigma) truncated to [lo, hi].
double truncated_mean(double mu, double sigma, double lo, double hi) {
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  const double mass = normal_cdf(b) - normal_cdf(a);
  if (mass < 1e-12) {
    // Essentially all mass clipped to one side.
    return mu < lo ? lo : hi;
  }
  return mu + sigma * (normal_pdf(a) - normal_pdf(b)) / mass;
}

// Solves for the underlying location so the truncated mean hits target.
double solve_truncated_location(double target, double sigma, double lo, double hi) {
  double a = lo - 12.0 * sigma;
  double b = hi + 12.0 * sigma;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (a + b);
    if (truncated_mean(mid, sigma, lo, hi) < target) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

struct TruncatedNormalSampler {
  double sigma = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  // One solved location per diurnal slot (a single slot when not modulated).
  std::vector<double> locations;

  double draw(DetRng& rng, std::size_t slot) const {
    const double mu = locations[slot % locations.size()];
    for (int tries = 0; tries < 1000; ++tries) {
      const double x = rng.normal(mu, sigma);
      if (x >= lo && x <= hi) return x;
    }
    return std::clamp(mu, lo, hi);
  }
};

struct ZipSampler {
  double lambda = 0.0;
  double occupancy = 0.0;  // probability the Poisson component fires
  double hi = 0.0;

  double draw(DetRng& rng) const {
    if (rng.uniform() >= occupancy) return 0.0;
    return std::min(static_cast<double>(rng.poisson(lambda)), hi);
  }
};

struct BetaSampler {
  double alpha = 0.0;
  double beta = 0.0;

  double draw(DetRng& rng) const { return 100.0 * rng.beta(alpha, beta); }
};

struct ZeroInflatedExpSampler {
  double wet_probability = 0.0;
  double wet_mean = 0.0;
  double hi = 0.0;

  double draw(DetRng& rng) const {
    if (rng.uniform() >= wet_probability) return 0.0;
    return std::min(rng.exponential(wet_mean), hi);
  }
};

// Index layout matches the frozen 27-feature order: metric-major, L/T/R.
struct MovementSamplers {
  // avg/max pairs per movement for speed, travel time, control delay.
  TruncatedNormalSampler avg[3][3];   // [pair: speed,tt,cd][movement]
  double max_sigma[3][3] = {};        // half-normal sigma for the max offset
  double max_lo[3][3] = {};
  double max_hi[3][3] = {};
  ZipSampler sfc[3];
  BetaSampler sfp[3];
  BetaSampler pog[3];
};

struct WeatherSamplers {
  TruncatedNormalSampler temperature;
  TruncatedNormalSampler humidity;
  TruncatedNormalSampler wind;
  ZeroInflatedExpSampler precipitation;
  TruncatedNormalSampler visibility;
  double abnormal_probability = 0.0;
};

TruncatedNormalSampler make_truncated(const FeatureDistribution& d, int diurnal_slots,
                                      double diurnal_amplitude) {
  TruncatedNormalSampler s;
  s.sigma = std::max(d.stddev, 1e-9);
  s.lo = d.min;
  s.hi = d.max;
  const int slots = std::max(1, diurnal_slots);
  s.locations.resize(static_cast<std::size_t>(slots));
  for (int i = 0; i < slots; ++i) {
    double target = d.mean;
    if (slots > 1) {
      const double phase = 2.0 * M_PI * static_cast<double>(i) / slots;
      target += diurnal_amplitude * d.stddev * std::sin(phase);
    }
    target = std::clamp(target, d.min + 1e-9 * (d.max - d.min),
                        d.max - 1e-9 * (d.max - d.min));
    s.locations[static_cast<std::size_t>(i)] =
        solve_truncated_location(target, s.sigma, s.lo, s.hi);
  }
  return s;
}

ZipSampler make_zip(const FeatureDistribution& d) {
  ZipSampler s;
  const double m = d.mean;
  const double var = d.stddev * d.stddev;
  s.lambda = var / std::max(m, 1e-12) + m - 1.0;
  s.lambda = std::max(s.lambda, 1e-6);
  s.occupancy = std::clamp(m / s.lambda, 0.0, 1.0);
  s.hi = d.max;
  return s;
}

BetaSampler make_beta(const FeatureDistribution& d) {
  BetaSampler s;
  const double mu = d.mean / 100.0;
  const double var = (d.stddev / 100.0) * (d.stddev / 100.0);
  const double nu = mu * (1.0 - mu) / var - 1.0;
  if (nu <= 0.0) {
    throw ConfigError("beta-scaled feature has inconsistent mean/stddev");
  }
  s.alpha = mu * nu;
  s.beta = (1.0 - mu) * nu;
  return s;
}

ZeroInflatedExpSampler make_zero_inflated_exp(const FeatureDistribution& d) {
  ZeroInflatedExpSampler s;
  // Published means round to one decimal; a mean of exactly zero is
  // untenable for a nonnegative spiky feature, so target a small positive
  // mean well inside the acceptance tolerance of 0.1*stddev.
  const double m = d.mean > 0.0 ? d.mean : 0.05 * d.stddev;
  const double var = d.stddev * d.stddev;
  s.wet_probability = std::clamp(2.0 * m * m / (var + m * m), 1e-6, 1.0);
  s.wet_mean = (var + m * m) / (2.0 * m);
  s.hi = d.max;
  return s;
}

struct CalibratedSamplers {
  MovementSamplers movements;
  WeatherSamplers weather;
};

CalibratedSamplers build_samplers(const FeatureCalibration& calibration,
                                  const GeneratorOptions& options) {
  calibration.validate();
  CalibratedSamplers out;
  static const char* pair_avg[3] = {"ASA", "TTA", "CDA"};
  static const char* pair_max[3] = {"ASM", "TTM", "CDM"};
  const auto& movements = movement_names();
  const double half_normal_mean = std::sqrt(2.0 / M_PI);
  for (int p = 0; p < 3; ++p) {
    for (int m = 0; m < 3; ++m) {
      const auto& avg = calibration.at(std::string(pair_avg[p]) + "_" + movements[m]);
      const auto& max = calibration.at(std::string(pair_max[p]) + "_" + movements[m]);
      FeatureDistribution avg_eff = avg;
      // The avg draw may never exceed the max-variant's ceiling, or the
      // max >= avg invariant could not be kept inside both ranges.
      avg_eff.max = std::min(avg.max, max.max);
      out.movements.avg[p][m] =
          make_truncated(avg_eff, kStepsPerDay, options.diurnal_amplitude);
      out.movements.max_sigma[p][m] =
          std::max(max.mean - avg.mean, 0.0) / half_normal_mean;
      out.movements.max_lo[p][m] = max.min;
      out.movements.max_hi[p][m] = max.max;
    }
  }
  for (int m = 0; m < 3; ++m) {
    out.movements.sfc[m] = make_zip(calibration.at(std::string("SFC_") + movements[m]));
    out.movements.sfp[m] = make_beta(calibration.at(std::string("SFP_") + movements[m]));
    out.movements.pog[m] = make_beta(calibration.at(std::string("POG_") + movements[m]));
  }
  out.weather.temperature = make_truncated(calibration.at("temperature"), 1, 0.0);
  out.weather.humidity = make_truncated(calibration.at("relative_humidity"), 1, 0.0);
  out.weather.wind = make_truncated(calibration.at("wind_speed"), 1, 0.0);
  out.weather.precipitation = make_zero_inflated_exp(calibration.at("precipitation"));
  out.weather.visibility = make_truncated(calibration.at("visibility"), 1, 0.0);
  out.weather.abnormal_probability = calibration.at("conditions").mean;
  return out;
}

MovementStats draw_movement(const MovementSamplers& s, int movement, std::size_t slot,
                            DetRng& rng) {
  MovementStats out;
  double* avg_fields[3] = {&out.avg_speed, &out.avg_travel_time, &out.avg_control_delay};
  double* max_fields[3] = {&out.max_speed, &out.max_travel_time, &out.max_control_delay};
  for (int p = 0; p < 3; ++p) {
    const double avg = s.avg[p][movement].draw(rng, slot);
    double mx = avg + std::abs(rng.normal(0.0, s.max_sigma[p][movement]));
    mx = std::min(mx, s.max_hi[p][movement]);
    mx = std::max(mx, s.max_lo[p][movement]);
    mx = std::max(mx, avg);
    *avg_fields[p] = avg;
    *max_fields[p] = mx;
  }
  out.split_failure_count = s.sfc[movement].draw(rng);
  out.split_failure_pct = s.sfp[movement].draw(rng);
  out.pct_on_green = s.pog[movement].draw(rng);
  return out;
}

WeatherRecord draw_weather(const WeatherSamplers& s, DetRng& rng) {
  WeatherRecord w;
  w.temperature = s.temperature.draw(rng, 0);
  w.relative_humidity = s.humidity.draw(rng, 0);
  w.wind_speed = s.wind.draw(rng, 0);
  w.precipitation = s.precipitation.draw(rng);
  w.visibility = s.visibility.draw(rng, 0);
  w.conditions = rng.uniform() < s.abnormal_probability ? 1.0 : 0.0;
  return w;
}

}  // namespace

void FeatureDistribution::validate(const std::string& name) const {
  if (!(min <= mean && mean <= max)) {
    throw ConfigError("calibration for " + name + " violates min <= mean <= max");
  }
  if (stddev < 0.0) throw ConfigError("calibration for " + name + " has negative stddev");
}

const FeatureDistribution& FeatureCalibration::at(const std::string& name) const {
  auto it = features.find(name);
  if (it == features.end()) throw ConfigError("calibration missing feature: " + name);
  return it->second;
}

void FeatureCalibration::validate() const {
  for (const std::string& name : approach_row_feature_names()) {
    at(name).validate(name);
  }
}

FeatureCalibration FeatureCalibration::defaults() {
  using Family = FeatureDistribution::Family;
  FeatureCalibration c;
  auto add = [&](const std::string& name, Family family, double mean, double stddev,
                 double min, double max) {
    c.features[name] = FeatureDistribution{family, mean, stddev, min, max};
  };
  add("ASA_L", Family::kTruncatedNormal, 30.13, 5.43, 11.0, 77.0);
  add("ASA_T", Family::kTruncatedNormal, 34.87, 7.2, 9.0, 103.0);
  add("ASA_R", Family::kTruncatedNormal, 31.89, 5.29, 6.0, 102.0);
  add("ASM_L", Family::kMaxOffset, 31.39, 5.68, 11.0, 78.0);
  add("ASM_T", Family::kMaxOffset, 42.26, 11.85, 9.0, 147.0);
  add("ASM_R", Family::kMaxOffset, 33.34, 5.51, 6.0, 100.0);
  add("TTA_L", Family::kTruncatedNormal, 71.53, 45.85, 8.0, 532.0);
  add("TTA_T", Family::kTruncatedNormal, 45.32, 34.32, 5.0, 500.0);
  add("TTA_R", Family::kTruncatedNormal, 32.71, 21.8, 7.0, 413.0);
  add("TTM_L", Family::kMaxOffset, 82.16, 55.24, 8.0, 556.0);
  add("TTM_T", Family::kMaxOffset, 68.59, 43.11, 5.0, 570.0);
  add("TTM_R", Family::kMaxOffset, 37.52, 27.9, 7.0, 489.0);
  add("CDA_L", Family::kTruncatedNormal, 57.94, 45.0, 1.0, 378.0);
  add("CDA_T", Family::kTruncatedNormal, 34.58, 32.39, 0.0, 491.0);
  add("CDA_R", Family::kTruncatedNormal, 17.37, 21.83, 0.0, 395.0);
  add("CDM_L", Family::kMaxOffset, 68.4, 54.3, 1.0, 543.0);
  add("CDM_T", Family::kMaxOffset, 57.83, 43.04, 1.0, 559.0);
  add("CDM_R", Family::kMaxOffset, 22.27, 28.01, 1.0, 473.0);
  add("SFC_L", Family::kZeroInflatedPoisson, 0.09, 0.37, 0.0, 8.0);
  add("SFC_T", Family::kZeroInflatedPoisson, 0.02, 0.19, 0.0, 9.0);
  add("SFC_R", Family::kZeroInflatedPoisson, 0.04, 0.23, 0.0, 7.0);
  add("SFP_L", Family::kBetaScaled, 3.0, 12.0, 0.0, 100.0);
  add("SFP_T", Family::kBetaScaled, 1.0, 5.0, 0.0, 100.0);
  add("SFP_R", Family::kBetaScaled, 1.0, 6.0, 0.0, 100.0);
  add("POG_L", Family::kBetaScaled, 22.0, 32.0, 0.0, 100.0);
  add("POG_T", Family::kBetaScaled, 54.0, 36.0, 0.0, 100.0);
  add("POG_R", Family::kBetaScaled, 69.0, 34.0, 0.0, 100.0);
  add("temperature", Family::kTruncatedNormal, 74.82, 11.19, 41.5, 95.0);
  add("relative_humidity", Family::kTruncatedNormal, 68.51, 17.56, 20.6, 100.0);
  add("wind_speed", Family::kTruncatedNormal, 5.89, 3.73, 0.0, 19.9);
  add("precipitation", Family::kZeroInflatedExp, 0.0, 0.04, 0.0, 0.72);
  add("visibility", Family::kTruncatedNormal, 9.56, 1.11, 0.6, 9.9);
  add("conditions", Family::kBernoulli, 0.18, 0.38, 0.0, 1.0);
  return c;
}

double pog_from_counts(std::int64_t total, std::int64_t stopped) {
  if (total <= 0) {
    throw UndefinedMetricError("POG is undefined for zero observed vehicles");
  }
  if (stopped < 0 || stopped > total) {
    throw ConfigError("stopped count must lie in [0, total]");
  }
  return static_cast<double>(total - stopped) / static_cast<double>(total) * 100.0;
}

std::vector<IntersectionGeometry> make_roster(int four_leg, int three_leg) {
  std::vector<IntersectionGeometry> out;
  int id = 1;
  for (int i = 0; i < four_leg; ++i, ++id) {
    out.push_back(IntersectionGeometry{
        "INT-" + std::string(id < 10 ? "0" : "") + std::to_string(id),
        {CompassLeg::kNorth, CompassLeg::kEast, CompassLeg::kSouth, CompassLeg::kWest}});
  }
  for (int i = 0; i < three_leg; ++i, ++id) {
    out.push_back(IntersectionGeometry{
        "INT-" + std::string(id < 10 ? "0" : "") + std::to_string(id),
        {CompassLeg::kNorth, CompassLeg::kEast, CompassLeg::kSouth}});
  }
  return out;
}

std::vector<IntersectionGeometry> paper_roster() { return make_roster(6, 2); }

void generate_snapshots(const std::vector<IntersectionGeometry>& geometries,
                        const FeatureCalibration& calibration, std::uint64_t seed,
                        const GeneratorOptions& options,
                        const std::function<void(const IntersectionSnapshot&)>& sink) {
  if (geometries.empty()) {
    throw ConfigError("generate_snapshots requires at least one intersection");
  }
  if (options.days < 1) throw ConfigError("generator days must be >= 1");
  for (const auto& g : geometries) g.validate();
  const CalibratedSamplers samplers = build_samplers(calibration, options);

  const std::int64_t steps = static_cast<std::int64_t>(options.days) * kStepsPerDay;
  for (std::size_t gi = 0; gi < geometries.size(); ++gi) {
    const IntersectionGeometry& geometry = geometries[gi];
    DetRng rng(derive_seed(seed, gi));
    for (std::int64_t step = 0; step < steps; ++step) {
      const std::size_t slot = static_cast<std::size_t>(step % kStepsPerDay);
      const WeatherRecord weather = draw_weather(samplers.weather, rng);
      for (CompassLeg leg : geometry.legs) {
        IntersectionSnapshot snapshot;
        snapshot.intersection_id = geometry.intersection_id;
        snapshot.timestamp = step * kStepMinutes;
        snapshot.approach = leg;
        snapshot.weather = weather;
        snapshot.features.left = draw_movement(samplers.movements, 0, slot, rng);
        snapshot.features.through = draw_movement(samplers.movements, 1, slot, rng);
        snapshot.features.right = draw_movement(samplers.movements, 2, slot, rng);
        sink(snapshot);
      }
    }
  }
}

std::vector<IntersectionSnapshot> generate_snapshot_vector(
    const std::vector<IntersectionGeometry>& geometries,
    const FeatureCalibration& calibration, std::uint64_t seed,
    const GeneratorOptions& options) {
  std::vector<IntersectionSnapshot> out;
  out.reserve(static_cast<std::size_t>(options.days) * kStepsPerDay * 4 *
              geometries.size());
  generate_snapshots(geometries, calibration, seed, options,
                     [&](const IntersectionSnapshot& s) { out.push_back(s); });
  return out;
}

namespace {

// The two 15-minute-aligned steps strictly preceding a minute-resolution
// event time: the step containing the final pre-crash interval and the one
// before it. An event exactly on a boundary belongs to the preceding step.
std::pair<std::int64_t, std::int64_t> preceding_steps(std::int64_t event_minute) {
  std::int64_t s1 = (event_minute % kStepMinutes == 0)
                        ? event_minute - kStepMinutes
                        : event_minute - event_minute % kStepMinutes;
  return {s1, s1 - kStepMinutes};
}

void perturb_snapshot(IntersectionSnapshot& snapshot,
                      const FeatureCalibration& calibration, double strength) {
  const auto& movements = movement_names();
  MovementStats* stats[3] = {&snapshot.features.left, &snapshot.features.through,
                             &snapshot.features.right};
  for (int m = 0; m < 3; ++m) {
    const auto& asa = calibration.at("ASA_" + movements[m]);
    const auto& asm_d = calibration.at("ASM_" + movements[m]);
    const auto& pog = calibration.at("POG_" + movements[m]);
    MovementStats& s = *stats[m];
    s.avg_speed = std::clamp(s.avg_speed + strength * asa.stddev, asa.min,
                             std::min(asa.max, asm_d.max));
    s.max_speed = std::clamp(s.max_speed + strength * asm_d.stddev, asm_d.min, asm_d.max);
    s.max_speed = std::max(s.max_speed, s.avg_speed);
    s.pct_on_green = std::clamp(s.pct_on_green - strength * pog.stddev, pog.min, pog.max);
  }
}

}  // namespace

std::vector<CrashEvent> inject_crashes(std::vector<IntersectionSnapshot>& snapshots,
                                       const std::vector<IntersectionGeometry>& geometries,
                                       const CrashInjectionPlan& plan,
                                       const FeatureCalibration& calibration,
                                       std::uint64_t seed) {
  if (plan.total < 1) throw ConfigError("crash plan total must be >= 1");
  if (plan.zone_ratio_within < 0 || plan.zone_ratio_approach < 0 ||
      plan.zone_ratio_within + plan.zone_ratio_approach <= 0) {
    throw ConfigError("crash plan zone ratio must be nonnegative and nonzero");
  }
  if (snapshots.empty()) throw ConfigError("inject_crashes requires snapshots");

  std::int64_t min_ts = snapshots.front().timestamp;
  std::int64_t max_ts = snapshots.front().timestamp;
  for (const auto& s : snapshots) {
    min_ts = std::min(min_ts, s.timestamp);
    max_ts = std::max(max_ts, s.timestamp);
  }
  // Event minutes span the covered range; the last step covers 15 minutes.
  const std::int64_t minute_lo = min_ts + 1;
  const std::int64_t minute_hi = max_ts + kStepMinutes;  // inclusive
  const std::int64_t minutes_available = minute_hi - minute_lo + 1;
  const std::int64_t capacity =
      minutes_available * static_cast<std::int64_t>(geometries.size());
  if (plan.total > capacity) {
    throw CapacityError("crash plan total " + std::to_string(plan.total) +
                        " exceeds available distinct timesteps " +
                        std::to_string(capacity));
  }

  const double within_share =
      static_cast<double>(plan.zone_ratio_within) /
      static_cast<double>(plan.zone_ratio_within + plan.zone_ratio_approach);
  const int n_within = static_cast<int>(std::llround(plan.total * within_share));

  DetRng rng(seed);
  std::vector<CrashEvent> events;
  events.reserve(static_cast<std::size_t>(plan.total));
  std::unordered_map<std::string, char> used;  // (intersection, minute) slots
  for (int i = 0; i < plan.total; ++i) {
    CrashEvent event;
    event.zone = i < n_within ? Zone::kWithinIntersection : Zone::kApproach;
    for (;;) {
      const std::size_t g = static_cast<std::size_t>(rng.below(geometries.size()));
      const std::int64_t minute =
          minute_lo + static_cast<std::int64_t>(
                          rng.below(static_cast<std::uint64_t>(minutes_available)));
      const std::string key = geometries[g].intersection_id + "@" + std::to_string(minute);
      if (used.count(key)) continue;
      used[key] = 1;
      event.intersection_id = geometries[g].intersection_id;
      event.timestamp = minute;
      if (event.zone == Zone::kApproach) {
        const auto& legs = geometries[g].legs;
        event.approach = legs[static_cast<std::size_t>(rng.below(legs.size()))];
      }
      break;
    }
    event.validate();
    events.push_back(event);
  }
  std::sort(events.begin(), events.end(), [](const CrashEvent& a, const CrashEvent& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    if (a.intersection_id != b.intersection_id) {
      return a.intersection_id < b.intersection_id;
    }
    return static_cast<int>(a.zone) < static_cast<int>(b.zone);
  });

  // Index snapshots for the perturbation pass.
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(snapshots.size());
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    index[snapshots[i].intersection_id + "#" + leg_to_string(snapshots[i].approach) +
          "@" + std::to_string(snapshots[i].timestamp)] = i;
  }
  auto perturb = [&](const std::string& intersection, CompassLeg leg, std::int64_t ts) {
    auto it = index.find(intersection + "#" + leg_to_string(leg) + "@" +
                         std::to_string(ts));
    if (it == index.end()) return;
    perturb_snapshot(snapshots[it->second], calibration, plan.signal_strength);
  };
  for (const CrashEvent& event : events) {
    const auto [s1, s2] = preceding_steps(event.timestamp);
    const IntersectionGeometry* geometry = nullptr;
    for (const auto& g : geometries) {
      if (g.intersection_id == event.intersection_id) {
        geometry = &g;
        break;
      }
    }
    for (std::int64_t ts : {s1, s2}) {
      if (event.zone == Zone::kApproach) {
        perturb(event.intersection_id, *event.approach, ts);
      } else if (geometry != nullptr) {
        for (CompassLeg leg : geometry->legs) {
          perturb(event.intersection_id, leg, ts);
        }
      }
    }
  }
  return events;
}

}  // namespace intformer
