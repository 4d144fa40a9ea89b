#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "intformer/datamodel.hpp"

namespace intformer {

// Marginal calibration for one generated feature.
struct FeatureDistribution {
  enum class Family {
    kTruncatedNormal,     // continuous features; underlying mean solved so the
                          // truncated mean matches the target
    kMaxOffset,           // max-variant = paired average + |half-normal|
    kZeroInflatedPoisson, // split-failure counts
    kBetaScaled,          // percentages on [0, 100]
    kBernoulli,           // binary condition flags
    kZeroInflatedExp      // precipitation-style spikes over a dry baseline
  };

  Family family = Family::kTruncatedNormal;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;

  void validate(const std::string& name) const;
};

// Per-feature calibration keyed by approach-zone feature name (27 traffic +
// 6 weather). Defaults carry the published descriptive statistics.
struct FeatureCalibration {
  std::map<std::string, FeatureDistribution> features;

  static FeatureCalibration defaults();
  const FeatureDistribution& at(const std::string& name) const;
  void validate() const;
};

struct CrashInjectionPlan {
  int total = 462;
  int zone_ratio_within = 338;
  int zone_ratio_approach = 124;
  // Crash-adjacent feature shift, in units of each feature's calibrated
  // stddev: speeds up, percent-on-green down, over the 30 minutes before
  // the event.
  double signal_strength = 1.0;
};

struct GeneratorOptions {
  int days = 365;
  double diurnal_amplitude = 0.3;  // fraction of stddev
};

// ((total - stopped) / total) * 100. Total must be positive.
double pog_from_counts(std::int64_t total, std::int64_t stopped);

std::vector<IntersectionGeometry> make_roster(int four_leg, int three_leg);
std::vector<IntersectionGeometry> paper_roster();  // 6 four-leg + 2 three-leg

// Emits one snapshot per (approach, 15-minute step) in deterministic order:
// roster order, then time, then clockwise legs. days*96 steps per approach.
void generate_snapshots(const std::vector<IntersectionGeometry>& geometries,
                        const FeatureCalibration& calibration, std::uint64_t seed,
                        const GeneratorOptions& options,
                        const std::function<void(const IntersectionSnapshot&)>& sink);

std::vector<IntersectionSnapshot> generate_snapshot_vector(
    const std::vector<IntersectionGeometry>& geometries,
    const FeatureCalibration& calibration, std::uint64_t seed,
    const GeneratorOptions& options);

// Draws plan.total crash events at distinct (intersection, minute) slots,
// splits them across zones per the plan ratio, and perturbs the two
// 15-minute intervals preceding each event in place (all legs for
// within-intersection events, the struck leg for approach events).
std::vector<CrashEvent> inject_crashes(std::vector<IntersectionSnapshot>& snapshots,
                                       const std::vector<IntersectionGeometry>& geometries,
                                       const CrashInjectionPlan& plan,
                                       const FeatureCalibration& calibration,
                                       std::uint64_t seed);

}  // namespace intformer
