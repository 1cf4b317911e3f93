#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vanetsim/errors.hpp"
#include "vanetsim/geometry.hpp"
#include "vanetsim/mobility/types.hpp"
#include "vanetsim/sim/time.hpp"

namespace vanetsim {

enum class Protocol : std::uint8_t { baseline, hybrid_vehcloud, dfcv };

constexpr std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::baseline: return "baseline";
    case Protocol::hybrid_vehcloud: return "hybrid_vehcloud";
    case Protocol::dfcv: return "dfcv";
  }
  return "?";
}

inline std::optional<Protocol> protocol_from_string(std::string_view s) {
  for (const auto p : {Protocol::baseline, Protocol::hybrid_vehcloud, Protocol::dfcv}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

enum class MessageKind : std::uint8_t { beacon, event_driven };

constexpr std::string_view to_string(MessageKind k) {
  return k == MessageKind::beacon ? "beacon" : "event_driven";
}

enum class MessageId : std::uint64_t {};
enum class StationId : std::uint32_t {};
enum class CellId : std::uint64_t {};

constexpr std::uint64_t index(MessageId id) { return static_cast<std::uint64_t>(id); }
constexpr std::uint32_t index(StationId id) { return static_cast<std::uint32_t>(id); }
constexpr std::uint64_t index(CellId id) { return static_cast<std::uint64_t>(id); }

/// Every vehicle within the sender's base-station coverage.
struct AllInRegion {
  bool operator==(const AllInRegion&) const = default;
};
using TargetRule = std::variant<AllInRegion, std::vector<VehicleId>>;

struct Message {
  MessageId id{};
  MessageKind kind = MessageKind::event_driven;
  VehicleId src{};
  SimTime origin_time;
  std::uint32_t size = 256;
  TargetRule targets = AllInRegion{};
  std::uint32_t ttl_hops = 8;
};

/// A roadside unit / base station hosting the fog node.
struct BaseStation {
  StationId id{};
  Position pos;

  bool operator==(const BaseStation&) const = default;
};

/// What a bus gateway reports to the vehicular cloud.
struct GatewayInfo {
  VehicleId gateway_id{};
  Position pos;
  SimTime access_delay;
  double bandwidth = 6e6;  // bit/s
};

/// Vehicular-cloud latencies. Defaults keep a cloud round trip well above the
/// fog processing time.
struct CloudModel {
  SimTime uplink_latency{50'000};
  SimTime downlink_latency{50'000};
  SimTime processing_latency{10'000};

  bool operator==(const CloudModel&) const = default;
};

struct FogCell {
  CellId id{};
  StationId station{};
  std::vector<VehicleId> members;  // sorted ascending
  std::size_t threshold = 20;
  VehicleId anchor{};

  std::size_t capacity() const { return members.size(); }
};

struct ShadowFlag {
  VehicleId vehicle{};
  std::uint8_t value = 0;  // 1 = no line of sight to the base station
};

/// Stations laid out on a lattice with the given spacing.
/// Highway: one row along the road centre line. Grid: a square lattice, with
/// each station snapped to the nearest street intersection.
inline std::vector<BaseStation> place_stations(MobilityMode mode, const Rect& bounds, double spacing,
                                               double grid_block) {
  if (!(spacing > 0.0)) throw ConfigError("protocol.bs_spacing: must be > 0");
  std::vector<BaseStation> out;
  const double width = bounds.x_max - bounds.x_min;
  const double height = bounds.y_max - bounds.y_min;
  const auto along = [&](double extent) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(extent / spacing)));
  };
  const auto nx = along(width);
  const double cy = 0.5 * (bounds.y_min + bounds.y_max);
  const bool two_d = mode == MobilityMode::synthetic_grid || (mode == MobilityMode::trace && height > spacing);
  const auto ny = two_d ? along(height) : 1;
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double slot_w = width / static_cast<double>(nx);
      const double slot_h = height / static_cast<double>(ny);
      Position p{bounds.x_min + (static_cast<double>(i) + 0.5) * slot_w,
                 two_d ? bounds.y_min + (static_cast<double>(j) + 0.5) * slot_h : cy};
      if (mode == MobilityMode::synthetic_grid && grid_block > 0.0) {
        p.x = std::round(p.x / grid_block) * grid_block;
        p.y = std::round(p.y / grid_block) * grid_block;
      }
      out.push_back(BaseStation{StationId{static_cast<std::uint32_t>(out.size())}, p});
    }
  }
  return out;
}

/// Nearest station within `coverage`; ties go to the smaller station id.
inline std::optional<StationId> associate(Position p, std::span<const BaseStation> stations, double coverage) {
  std::optional<StationId> best;
  double best_d = 0.0;
  for (const auto& bs : stations) {
    const double d = distance(p, bs.pos);
    if (d > coverage) continue;
    if (!best || d < best_d || (d == best_d && index(bs.id) < index(*best))) {
      best = bs.id;
      best_d = d;
    }
  }
  return best;
}

inline const BaseStation& station(std::span<const BaseStation> stations, StationId id) {
  if (index(id) >= stations.size() || stations[index(id)].id != id) {
    throw LookupError("unknown base station " + std::to_string(index(id)));
  }
  return stations[index(id)];
}

}  // namespace vanetsim
