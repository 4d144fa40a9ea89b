#include <doctest.h>

#include "intformer/datamodel.hpp"
#include "intformer/errors.hpp"
#include "intformer/rng.hpp"
#include "intformer/util.hpp"

using namespace intformer;

namespace {

IntersectionSnapshot sample_snapshot(std::uint64_t seed) {
  DetRng rng(seed);
  IntersectionSnapshot s;
  s.intersection_id = "INT-01";
  s.timestamp = 15 * static_cast<std::int64_t>(rng.below(96));
  s.approach = CompassLeg::kEast;
  auto fill = [&](MovementStats& m) {
    m.avg_speed = rng.uniform(10.0, 40.0);
    m.max_speed = m.avg_speed + rng.uniform(0.0, 10.0);
    m.avg_travel_time = rng.uniform(10.0, 100.0);
    m.max_travel_time = m.avg_travel_time + rng.uniform(0.0, 50.0);
    m.avg_control_delay = rng.uniform(0.0, 60.0);
    m.max_control_delay = m.avg_control_delay + rng.uniform(0.0, 30.0);
    m.split_failure_count = static_cast<double>(rng.below(5));
    m.split_failure_pct = rng.uniform(0.0, 100.0);
    m.pct_on_green = rng.uniform(0.0, 100.0);
  };
  fill(s.features.left);
  fill(s.features.through);
  fill(s.features.right);
  s.weather = WeatherRecord{75.0, 60.0, 4.0, 0.0, 9.5, 0.0};
  return s;
}

}  // namespace

TEST_SUITE("datamodel") {
  TEST_CASE("flatten_features yields 33 ordered scalars") {
    const IntersectionSnapshot s = sample_snapshot(1);
    const std::vector<double> flat = flatten_features(s);
    REQUIRE(flat.size() == 33);
    // The frozen order starts with the three average speeds and ends with
    // the weather block.
    CHECK(flat[0] == s.features.left.avg_speed);
    CHECK(flat[1] == s.features.through.avg_speed);
    CHECK(flat[2] == s.features.right.avg_speed);
    CHECK(flat[26] == s.features.right.pct_on_green);
    CHECK(flat[27] == s.weather.temperature);
    CHECK(flat[32] == s.weather.conditions);
  }

  TEST_CASE("zeroed snapshot flattens to zeros") {
    IntersectionSnapshot s;
    s.intersection_id = "INT-01";
    const std::vector<double> flat = flatten_features(s);
    for (double v : flat) CHECK(v == 0.0);
  }

  TEST_CASE("unflatten(flatten(s)) round-trips bit-exactly") {
    const IntersectionSnapshot s = sample_snapshot(7);
    const std::vector<double> flat = flatten_features(s);
    ApproachFeatureVector features;
    WeatherRecord weather;
    unflatten_features(flat, features, weather);
    CHECK(flatten_features(IntersectionSnapshot{"x", 0, CompassLeg::kNorth, features,
                                                weather}) == flat);
  }

  TEST_CASE("feature name rosters have frozen widths and order") {
    const auto& approach = approach_row_feature_names();
    const auto& within = within_row_feature_names();
    REQUIRE(approach.size() == kApproachRowWidth);
    REQUIRE(within.size() == kWithinRowWidth);
    CHECK(approach.front() == "ASA_L");
    CHECK(approach[26] == "POG_R");
    CHECK(approach.back() == "conditions");
    CHECK(within.front() == "ASA_L_A");
    CHECK(within[27] == "ASA_L_B");
    CHECK(within[107] == "POG_R_D");
    CHECK(within.back() == "conditions");
  }

  TEST_CASE("movement invariants are enforced") {
    MovementStats m;
    m.avg_speed = 30.0;
    m.max_speed = 20.0;  // violates max >= avg
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m.max_speed = 35.0;
    m.split_failure_count = 1.5;  // non-integer
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m.split_failure_count = 2.0;
    m.pct_on_green = 130.0;
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m.pct_on_green = 50.0;
    CHECK_NOTHROW(m.validate());
  }

  TEST_CASE("snapshot timestamps must be 15-minute aligned") {
    IntersectionSnapshot s = sample_snapshot(3);
    s.timestamp = 17;
    CHECK_THROWS_AS(s.validate(), ConfigError);
  }

  TEST_CASE("crash zone and approach fields are consistent") {
    CrashEvent within{"INT-01", Zone::kWithinIntersection, std::nullopt, 100};
    CHECK_NOTHROW(within.validate());
    within.approach = CompassLeg::kNorth;
    CHECK_THROWS_AS(within.validate(), ConfigError);

    CrashEvent approach{"INT-01", Zone::kApproach, CompassLeg::kWest, 100};
    CHECK_NOTHROW(approach.validate());
    approach.approach.reset();
    CHECK_THROWS_AS(approach.validate(), ConfigError);
  }

  TEST_CASE("leg and zone labels round-trip") {
    for (CompassLeg leg : {CompassLeg::kNorth, CompassLeg::kEast, CompassLeg::kSouth,
                           CompassLeg::kWest}) {
      CHECK(leg_from_string(leg_to_string(leg)) == leg);
    }
    CHECK(zone_from_string(zone_to_string(Zone::kApproach)) == Zone::kApproach);
    CHECK_THROWS_AS(leg_from_string("Q"), ConfigError);
  }

  TEST_CASE("timestamps format and parse as ISO-8601") {
    CHECK(iso8601_from_minutes(0) == "2021-07-01T00:00:00");
    CHECK(iso8601_from_minutes(15) == "2021-07-01T00:15:00");
    CHECK(iso8601_from_minutes(1440) == "2021-07-02T00:00:00");
    CHECK(iso8601_from_minutes(365LL * 1440 - 15) == "2022-06-30T23:45:00");
    for (std::int64_t m : {0LL, 15LL, 1000005LL, 365LL * 1440 - 15}) {
      CHECK(minutes_from_iso8601(iso8601_from_minutes(m)) == m);
    }
  }
}
