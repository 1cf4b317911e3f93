#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "vanetsim/errors.hpp"
#include "vanetsim/mobility/fcd.hpp"
#include "vanetsim/mobility/provider.hpp"

using namespace vanetsim;

namespace {

const std::string kFixture = std::string(VANETSIM_TEST_DATA) + "/two_vehicles.fcd.xml";

MobilityProvider fixture_provider() {
  RngStream rng(1, "mobility");
  return MobilityProvider::from_trace(parse_fcd(kFixture), 0.0, rng);
}

}  // namespace

TEST(Units, MphConversion) {
  EXPECT_DOUBLE_EQ(mph_to_mps(30.0), 13.4112);
  for (double mph : {0.5, 30.0, 45.25, 60.0, 1234.5}) {
    EXPECT_NEAR(mps_to_mph(mph_to_mps(mph)), mph, 1e-9 * mph);
  }
}

TEST(MobilitySpec, ValidationNamesTheKey) {
  MobilitySpec s;
  s.road_length = 0;
  try {
    s.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("mobility.road_length"), std::string::npos);
  }
  s = MobilitySpec{};
  s.vehicle_count = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s.vehicle_count = 10'001;
  EXPECT_THROW(s.validate(), ConfigError);
  s = MobilitySpec{};
  s.mode = MobilityMode::trace;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Highway, SpawnsOnTheRoadWithLaneOffsets) {
  MobilitySpec spec;
  spec.vehicle_count = 50;
  RngStream rng(3, "mobility");
  const auto p = MobilityProvider::build(spec, rng);
  ASSERT_EQ(p.size(), 50u);
  const double lo = mph_to_mps(30.0), hi = mph_to_mps(60.0);
  for (SimTime t : {SimTime{}, SimTime::from_seconds(17.3), SimTime::from_seconds(600)}) {
    for (const auto& v : p.snapshot(t)) {
      EXPECT_GE(v.pos.x, 0.0);
      EXPECT_LT(v.pos.x, 10'000.0);
      const double lane = v.pos.y / kLaneWidth;
      EXPECT_DOUBLE_EQ(lane, std::round(lane));
      EXPECT_GE(lane, 0.0);
      EXPECT_LT(lane, 4.0);
      EXPECT_GE(v.speed, lo);
      EXPECT_LE(v.speed, hi);
    }
  }
}

TEST(Highway, GatewayFractionIsRounded) {
  MobilitySpec spec;
  spec.vehicle_count = 450;
  RngStream rng(3, "mobility");
  const auto p = MobilityProvider::build(spec, rng);
  std::size_t buses = 0;
  for (std::uint32_t i = 0; i < p.size(); ++i) buses += p.is_gateway(vehicle(i)) ? 1 : 0;
  EXPECT_EQ(buses, 23u);  // round(0.05 * 450)
}

TEST(Highway, ConstantSpeedKinematics) {
  const auto p = MobilityProvider::highway_placed(10'000, 4, {{0.0, 0, 20.0}, {9'990.0, 1, 20.0}});
  const auto a = p.position_at(vehicle(0), SimTime::from_seconds(1));
  EXPECT_DOUBLE_EQ(a.pos.x, 20.0);
  EXPECT_DOUBLE_EQ(a.pos.y, 0.0);
  const auto b = p.position_at(vehicle(1), SimTime::from_seconds(1));
  EXPECT_NEAR(b.pos.x, 10.0, 1e-9);
  EXPECT_DOUBLE_EQ(b.pos.y, kLaneWidth);
}

TEST(Highway, MovementMatchesSpeedTimesTime) {
  MobilitySpec spec;
  spec.vehicle_count = 30;
  RngStream rng(8, "mobility");
  const auto p = MobilityProvider::build(spec, rng);
  const SimTime t = SimTime::from_seconds(12.5);
  for (std::uint32_t i = 0; i < p.size(); ++i) {
    const auto s0 = p.position_at(vehicle(i), SimTime{});
    const auto s1 = p.position_at(vehicle(i), t);
    const double expect = std::fmod(s0.pos.x + s0.speed * 12.5, 10'000.0);
    EXPECT_NEAR(s1.pos.x, expect, 1e-6);
  }
}

TEST(Grid, VehiclesStayOnStreets) {
  MobilitySpec spec;
  spec.mode = MobilityMode::synthetic_grid;
  spec.road_length = 1000;
  spec.grid_block = 250;
  spec.vehicle_count = 80;
  RngStream rng(2, "mobility");
  const auto p = MobilityProvider::build(spec, rng);
  for (SimTime t : {SimTime{}, SimTime::from_seconds(33.3)}) {
    for (const auto& v : p.snapshot(t)) {
      const bool on_row = std::fmod(v.pos.y, 250.0) == 0.0;
      const bool on_column = std::fmod(v.pos.x, 250.0) == 0.0;
      EXPECT_TRUE(on_row || on_column) << v.pos.x << "," << v.pos.y;
      EXPECT_GE(std::min(v.pos.x, v.pos.y), 0.0);
      EXPECT_LT(std::max(v.pos.x, v.pos.y), 1000.0);
    }
  }
}

TEST(Provider, SameQuerySameAnswer) {
  MobilitySpec spec;
  spec.vehicle_count = 20;
  RngStream r1(4, "mobility");
  RngStream r2(4, "mobility");
  const auto a = MobilityProvider::build(spec, r1);
  const auto b = MobilityProvider::build(spec, r2);
  const SimTime t = SimTime::from_seconds(3.25);
  for (std::uint32_t i = 0; i < 20; ++i) {
    EXPECT_EQ(a.position_at(vehicle(i), t).pos, a.position_at(vehicle(i), t).pos);
    EXPECT_EQ(a.position_at(vehicle(i), t).pos, b.position_at(vehicle(i), t).pos);
  }
}

TEST(Provider, UnknownVehicleIsALookupError) {
  const auto p = fixture_provider();
  EXPECT_THROW(p.position_at(vehicle(2), SimTime{}), LookupError);
}

TEST(Fcd, FixtureYieldsSamplesInDocumentOrder) {
  const auto samples = parse_fcd(kFixture);
  ASSERT_EQ(samples.size(), 6u);
  EXPECT_EQ(samples[0].vehicle_id, "car0");
  EXPECT_EQ(samples[1].vehicle_id, "bus1");
  EXPECT_EQ(samples[3].time.us, 1'000'000u);
  EXPECT_DOUBLE_EQ(samples[3].pos.y, 70.0);
  EXPECT_DOUBLE_EQ(samples[3].speed, 20.0);
  EXPECT_EQ(samples[5].time.us, 3'000'000u);
}

TEST(Fcd, TwoTimestepsTwoVehicles) {
  const auto samples = parse_fcd_text(R"(<fcd-export>
    <timestep time="0"><vehicle id="a" x="1" y="2" speed="3"/><vehicle id="b" x="4" y="5" speed="6"/></timestep>
    <timestep time="1"><vehicle id="a" x="7" y="8" speed="9"/><vehicle id="b" x="10" y="11" speed="12"/></timestep>
  </fcd-export>)");
  ASSERT_EQ(samples.size(), 4u);
  EXPECT_EQ(samples[2].vehicle_id, "a");
  EXPECT_DOUBLE_EQ(samples[2].pos.x, 7.0);
  EXPECT_DOUBLE_EQ(samples[3].speed, 12.0);
}

TEST(Fcd, EmptyRootGivesNoSamples) {
  EXPECT_TRUE(parse_fcd_text("<fcd-export/>").empty());
}

TEST(Fcd, TimeRoundsHalfUpToMicroseconds) {
  const auto samples = parse_fcd_text(R"(<fcd-export>
    <timestep time="0.0000005"><vehicle id="a" x="0" y="0" speed="0"/></timestep>
    <timestep time="1.2345674"><vehicle id="a" x="0" y="0" speed="0"/></timestep>
    <timestep time="2.5"><vehicle id="a" x="0" y="0" speed="0"/></timestep>
  </fcd-export>)");
  ASSERT_EQ(samples.size(), 3u);
  EXPECT_EQ(samples[0].time.us, 1u);
  EXPECT_EQ(samples[1].time.us, 1'234'567u);
  EXPECT_EQ(samples[2].time.us, 2'500'000u);
}

TEST(Fcd, UnknownElementsAndAttributesAreIgnored) {
  const auto samples = parse_fcd_text(R"(<fcd-export version="1">
    <timestep time="0">
      <person id="p" x="1" y="1" speed="1"/>
      <vehicle id="a" x="1" y="2" speed="3" angle="4" lane="z"><param key="k" value="v"/></vehicle>
    </timestep>
    <meta/>
  </fcd-export>)");
  ASSERT_EQ(samples.size(), 1u);
  EXPECT_EQ(samples[0].vehicle_id, "a");
}

TEST(Fcd, NonMonotoneTimestampsAreRejectedWithLine) {
  try {
    parse_fcd(std::string(VANETSIM_TEST_DATA) + "/non_monotone.fcd.xml");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 6u);
    EXPECT_NE(std::string(e.what()).find("id=\"a\""), std::string::npos) << e.what();
  }
}

TEST(Fcd, MissingAttributeNamesTheElement) {
  try {
    parse_fcd_text("<fcd-export>\n<timestep time=\"0\">\n<vehicle id=\"q\" x=\"1\" speed=\"2\"/>\n</timestep>\n</fcd-export>");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    const std::string what = e.what();
    EXPECT_NE(what.find("'y'"), std::string::npos) << what;
    EXPECT_NE(what.find("id=\"q\""), std::string::npos) << what;
  }
}

TEST(Fcd, MalformedXmlReportsLine) {
  try {
    parse_fcd_text("<fcd-export>\n<timestep time=\"0\">\n<vehicle id=\"a\" x=\"1\" y=\"2\" speed=\"3\">\n</fcd-export>");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_THROW(parse_fcd_text(""), ParseError);
  EXPECT_THROW(parse_fcd_text("<routes/>"), ParseError);
  EXPECT_THROW(parse_fcd_text("<fcd-export><timestep><vehicle id='a' x='0' y='0' speed='0'/></timestep></fcd-export>"),
               ParseError);
  EXPECT_THROW(parse_fcd_text("<fcd-export><timestep time='0'><vehicle id='a' x='zz' y='0' speed='0'/></timestep></fcd-export>"),
               ParseError);
}

TEST(Fcd, UnreadableFileIsAParseError) {
  EXPECT_THROW(parse_fcd("/nonexistent/trace.xml"), ParseError);
}

TEST(Trace, ReproducesSamplesExactly) {
  const auto p = fixture_provider();
  ASSERT_EQ(p.size(), 2u);
  for (const auto& s : parse_fcd(kFixture)) {
    const VehicleId id = s.vehicle_id == "car0" ? vehicle(0) : vehicle(1);
    const auto v = p.position_at(id, s.time);
    EXPECT_EQ(v.pos, s.pos) << s.vehicle_id << " at " << s.time.us;
    EXPECT_EQ(v.speed, s.speed);
  }
}

TEST(Trace, LinearMidpointsAndClamping) {
  const auto p = fixture_provider();
  EXPECT_EQ(p.name(vehicle(0)), "car0");
  const auto mid = p.position_at(vehicle(0), SimTime::from_seconds(2));
  EXPECT_DOUBLE_EQ(mid.pos.x, 30.0);
  EXPECT_DOUBLE_EQ(mid.speed, 15.0);
  const auto half = p.position_at(vehicle(1), SimTime::from_seconds(0.5));
  EXPECT_DOUBLE_EQ(half.pos.y, 60.0);
  EXPECT_DOUBLE_EQ(half.pos.x, 100.0);
  const auto after = p.position_at(vehicle(1), SimTime::from_seconds(99));
  EXPECT_DOUBLE_EQ(after.pos.y, 110.0);
}

TEST(Trace, SimpleInterpolation) {
  std::vector<TraceSample> s{{SimTime{}, "v", {0.0, 0.0}, 50.0}, {SimTime::from_seconds(2), "v", {100.0, 0.0}, 50.0}};
  RngStream rng(1, "mobility");
  const auto p = MobilityProvider::from_trace(s, 0.0, rng);
  EXPECT_DOUBLE_EQ(p.position_at(vehicle(0), SimTime::from_seconds(1)).pos.x, 50.0);
}

TEST(Trace, BuildChecksVehicleCount) {
  MobilitySpec spec;
  spec.mode = MobilityMode::trace;
  spec.trace_path = kFixture;
  spec.vehicle_count = 2;
  RngStream rng(1, "mobility");
  EXPECT_EQ(MobilityProvider::build(spec, rng).size(), 2u);
  spec.vehicle_count = 3;
  RngStream rng2(1, "mobility");
  EXPECT_THROW(MobilityProvider::build(spec, rng2), ConfigError);
}
