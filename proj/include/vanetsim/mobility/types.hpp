#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "vanetsim/errors.hpp"
#include "vanetsim/geometry.hpp"
#include "vanetsim/sim/time.hpp"

namespace vanetsim {

enum class VehicleId : std::uint32_t {};

constexpr std::uint32_t index(VehicleId id) { return static_cast<std::uint32_t>(id); }
constexpr VehicleId vehicle(std::uint32_t i) { return static_cast<VehicleId>(i); }

inline constexpr double kMphToMps = 0.44704;
inline constexpr double kLaneWidth = 3.5;

constexpr double mph_to_mps(double mph) { return mph * kMphToMps; }
constexpr double mps_to_mph(double mps) { return mps / kMphToMps; }

struct VehicleState {
  VehicleId id{};
  Position pos;
  double speed = 0.0;    // m/s
  double heading = 0.0;  // radians, counter-clockwise from +x
  bool is_gateway = false;

  bool operator==(const VehicleState&) const = default;
};

/// One `<vehicle>` entry of an FCD trace.
struct TraceSample {
  SimTime time;
  std::string vehicle_id;
  Position pos;
  double speed = 0.0;

  bool operator==(const TraceSample&) const = default;
};

enum class MobilityMode { synthetic_highway, synthetic_grid, trace };

struct MobilitySpec {
  MobilityMode mode = MobilityMode::synthetic_highway;
  double road_length = 10'000.0;  // highway length, or grid side length
  std::uint32_t lanes = 4;
  std::uint32_t vehicle_count = 50;
  std::array<double, 2> speed_range_mph{30.0, 60.0};
  double grid_block = 250.0;  // street spacing in grid mode
  double gateway_fraction = 0.05;
  std::optional<std::string> trace_path;

  bool operator==(const MobilitySpec&) const = default;

  void validate() const {
    if (!(road_length > 0.0) || !std::isfinite(road_length)) {
      throw ConfigError("mobility.road_length: must be > 0");
    }
    if (vehicle_count < 1 || vehicle_count > 10'000) {
      throw ConfigError("mobility.vehicle_count: must be in [1, 10000]");
    }
    if (lanes < 1) throw ConfigError("mobility.lanes: must be >= 1");
    const auto [lo, hi] = speed_range_mph;
    if (!(lo >= 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
      throw ConfigError("mobility.speed_range_mph: expected 0 <= min <= max");
    }
    if (!(grid_block > 0.0) || grid_block > road_length) {
      throw ConfigError("mobility.grid_block: must be in (0, road_length]");
    }
    if (!(gateway_fraction >= 0.0 && gateway_fraction <= 1.0)) {
      throw ConfigError("protocol.gateway_fraction: must be in [0, 1]");
    }
    if (mode == MobilityMode::trace && !trace_path) {
      throw ConfigError("mobility.trace_path: required in trace mode");
    }
  }
};

}  // namespace vanetsim
