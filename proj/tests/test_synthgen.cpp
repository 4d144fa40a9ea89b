#include <doctest.h>

#include <cmath>
#include <map>

#include "intformer/datamodel.hpp"
#include "intformer/errors.hpp"
#include "intformer/synthgen.hpp"

using namespace intformer;

namespace {

GeneratorOptions days_options(int days) {
  GeneratorOptions o;
  o.days = days;
  return o;
}

}  // namespace

TEST_SUITE("synthgen") {
  TEST_CASE("pog_from_counts arithmetic") {
    CHECK(pog_from_counts(10, 4) == doctest::Approx(60.0));
    CHECK(pog_from_counts(7, 0) == doctest::Approx(100.0));
    CHECK(pog_from_counts(50, 50) == doctest::Approx(0.0));
    CHECK_THROWS_AS(pog_from_counts(0, 0), UndefinedMetricError);
    CHECK_THROWS_AS(pog_from_counts(5, 6), ConfigError);
  }

  TEST_CASE("one 3-leg intersection for one day yields 288 snapshots") {
    const auto roster = make_roster(0, 1);
    const auto snapshots = generate_snapshot_vector(
        roster, FeatureCalibration::defaults(), 1, days_options(1));
    CHECK(snapshots.size() == 3 * 96);
  }

  TEST_CASE("paper roster counting identity at reduced days") {
    const auto roster = paper_roster();
    REQUIRE(roster.size() == 8);
    int approaches = 0;
    for (const auto& g : roster) approaches += g.leg_count();
    CHECK(approaches == 30);
    const auto snapshots = generate_snapshot_vector(
        roster, FeatureCalibration::defaults(), 1, days_options(2));
    CHECK(snapshots.size() == 30u * 2u * 96u);
  }

  TEST_CASE("generation is deterministic under a fixed seed") {
    const auto roster = make_roster(1, 0);
    const auto a = generate_snapshot_vector(roster, FeatureCalibration::defaults(), 9,
                                            days_options(2));
    const auto b = generate_snapshot_vector(roster, FeatureCalibration::defaults(), 9,
                                            days_options(2));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(flatten_features(a[i]) == flatten_features(b[i]));
      CHECK(a[i].timestamp == b[i].timestamp);
    }
    const auto c = generate_snapshot_vector(roster, FeatureCalibration::defaults(), 10,
                                            days_options(2));
    bool any_different = false;
    for (std::size_t i = 0; i < a.size() && !any_different; ++i) {
      any_different = flatten_features(a[i]) != flatten_features(c[i]);
    }
    CHECK(any_different);
  }

  TEST_CASE("every sample respects range, ordering, and integrality invariants") {
    const auto roster = make_roster(1, 1);
    const auto calibration = FeatureCalibration::defaults();
    const auto snapshots = generate_snapshot_vector(roster, calibration, 4,
                                                    days_options(3));
    const auto& names = approach_row_feature_names();
    for (const auto& s : snapshots) {
      s.validate();  // max >= avg, percentages in range, sfc integral
      const std::vector<double> flat = flatten_features(s);
      for (std::size_t j = 0; j < flat.size(); ++j) {
        const auto& d = calibration.at(names[j]);
        CHECK(flat[j] >= d.min);
        CHECK(flat[j] <= d.max);
      }
    }
  }

  TEST_CASE("sample means track the calibrated means within a tenth of a stddev") {
    const auto roster = make_roster(1, 0);
    const auto calibration = FeatureCalibration::defaults();
    const auto snapshots = generate_snapshot_vector(roster, calibration, 123,
                                                    days_options(30));
    const auto& names = approach_row_feature_names();
    std::vector<double> sums(names.size(), 0.0);
    for (const auto& s : snapshots) {
      const std::vector<double> flat = flatten_features(s);
      for (std::size_t j = 0; j < flat.size(); ++j) sums[j] += flat[j];
    }
    for (std::size_t j = 0; j < names.size(); ++j) {
      const auto& d = calibration.at(names[j]);
      const double mean = sums[j] / static_cast<double>(snapshots.size());
      INFO(names[j], " mean=", mean, " target=", d.mean, " std=", d.stddev);
      CHECK(std::abs(mean - d.mean) <= 0.1 * d.stddev);
    }
    // The headline speed example: sample mean of ASA_L within +-0.5.
    CHECK(std::abs(sums[0] / static_cast<double>(snapshots.size()) - 30.13) <= 0.5);
  }

  TEST_CASE("crash plan splits zones by the configured ratio") {
    const auto roster = paper_roster();
    auto snapshots = generate_snapshot_vector(roster, FeatureCalibration::defaults(),
                                              11, days_options(30));
    CrashInjectionPlan plan;
    plan.total = 462;
    const auto events = inject_crashes(snapshots, roster, plan,
                                       FeatureCalibration::defaults(), 21);
    REQUIRE(events.size() == 462);
    int within = 0, approach = 0;
    for (const auto& e : events) {
      e.validate();
      (e.zone == Zone::kWithinIntersection ? within : approach) += 1;
    }
    CHECK(within == 338);
    CHECK(approach == 124);
  }

  TEST_CASE("single-crash plan produces exactly one event") {
    const auto roster = make_roster(1, 0);
    auto snapshots = generate_snapshot_vector(roster, FeatureCalibration::defaults(), 2,
                                              days_options(2));
    CrashInjectionPlan plan;
    plan.total = 1;
    const auto events = inject_crashes(snapshots, roster, plan,
                                       FeatureCalibration::defaults(), 3);
    CHECK(events.size() == 1);
  }

  TEST_CASE("crash injection is deterministic and collision-free") {
    const auto roster = make_roster(2, 0);
    const auto base = generate_snapshot_vector(roster, FeatureCalibration::defaults(),
                                               5, days_options(5));
    CrashInjectionPlan plan;
    plan.total = 40;
    auto first = base;
    auto second = base;
    const auto events_a = inject_crashes(first, roster, plan,
                                         FeatureCalibration::defaults(), 77);
    const auto events_b = inject_crashes(second, roster, plan,
                                         FeatureCalibration::defaults(), 77);
    REQUIRE(events_a.size() == events_b.size());
    std::map<std::pair<std::string, std::int64_t>, int> seen;
    for (std::size_t i = 0; i < events_a.size(); ++i) {
      CHECK(events_a[i].intersection_id == events_b[i].intersection_id);
      CHECK(events_a[i].timestamp == events_b[i].timestamp);
      CHECK(events_a[i].zone == events_b[i].zone);
      seen[{events_a[i].intersection_id, events_a[i].timestamp}] += 1;
    }
    for (const auto& [slot, count] : seen) CHECK(count == 1);
  }

  TEST_CASE("oversized crash plans raise a capacity error") {
    const auto roster = make_roster(1, 0);
    auto snapshots = generate_snapshot_vector(roster, FeatureCalibration::defaults(), 2,
                                              days_options(1));
    CrashInjectionPlan plan;
    plan.total = 2000;  // one intersection-day covers only 1440 minutes
    CHECK_THROWS_AS(inject_crashes(snapshots, roster, plan,
                                   FeatureCalibration::defaults(), 3),
                    CapacityError);
  }

  TEST_CASE("injection perturbs exactly the two preceding intervals") {
    const auto roster = make_roster(1, 0);
    const auto calibration = FeatureCalibration::defaults();
    const auto clean = generate_snapshot_vector(roster, calibration, 31,
                                                days_options(3));
    auto perturbed = clean;
    CrashInjectionPlan plan;
    plan.total = 3;
    plan.signal_strength = 2.0;
    const auto events = inject_crashes(perturbed, roster, plan, calibration, 55);

    // The affected (leg, timestep) slots per event.
    std::map<std::pair<int, std::int64_t>, bool> affected;
    for (const auto& e : events) {
      std::int64_t s1 = (e.timestamp % 15 == 0) ? e.timestamp - 15
                                                : e.timestamp - e.timestamp % 15;
      for (std::int64_t ts : {s1, s1 - 15}) {
        if (e.zone == Zone::kWithinIntersection) {
          for (CompassLeg leg : roster[0].legs) {
            affected[{static_cast<int>(leg), ts}] = true;
          }
        } else {
          affected[{static_cast<int>(*e.approach), ts}] = true;
        }
      }
    }
    REQUIRE(clean.size() == perturbed.size());
    for (std::size_t i = 0; i < clean.size(); ++i) {
      const bool hit =
          affected.count({static_cast<int>(clean[i].approach), clean[i].timestamp}) > 0;
      if (!hit) {
        CHECK(flatten_features(clean[i]) == flatten_features(perturbed[i]));
      } else {
        perturbed[i].validate();
        CHECK(perturbed[i].features.left.avg_speed >= clean[i].features.left.avg_speed);
        CHECK(perturbed[i].features.through.max_speed >=
              clean[i].features.through.max_speed);
        CHECK(perturbed[i].features.right.pct_on_green <=
              clean[i].features.right.pct_on_green);
      }
    }
  }

  TEST_CASE("generator rejects empty rosters and bad plans") {
    CHECK_THROWS_AS(generate_snapshot_vector({}, FeatureCalibration::defaults(), 1,
                                             days_options(1)),
                    ConfigError);
    const auto roster = make_roster(1, 0);
    auto snapshots = generate_snapshot_vector(roster, FeatureCalibration::defaults(), 1,
                                              days_options(1));
    CrashInjectionPlan plan;
    plan.total = 0;
    CHECK_THROWS_AS(inject_crashes(snapshots, roster, plan,
                                   FeatureCalibration::defaults(), 1),
                    ConfigError);
  }
}
