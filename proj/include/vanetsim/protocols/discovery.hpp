#pragma once

#include <span>
#include <vector>

#include "vanetsim/protocols/types.hpp"
#include "vanetsim/radio/radio.hpp"

namespace vanetsim {

/// Vehicles within the coverage radius of the sender's base station,
/// excluding the sender, in id order. Empty if the sender has no station.
/// `snapshot` is indexed by vehicle id.
inline std::vector<VehicleId> scan_trans_range(std::span<const VehicleState> snapshot, VehicleId sender,
                                               std::span<const BaseStation> stations, double coverage) {
  std::vector<VehicleId> out;
  const auto bs = associate(snapshot[index(sender)].pos, stations, coverage);
  if (!bs) return out;
  const Position center = station(stations, *bs).pos;
  for (const auto& v : snapshot) {
    if (v.id != sender && distance(v.pos, center) <= coverage) out.push_back(v.id);
  }
  return out;
}

/// 1 iff the vehicle has no line of sight to `bs`. Purely geometric.
inline ShadowFlag obstacle_shadowing(const VehicleState& v, const BaseStation& bs, const ObstacleMap& map) {
  return ShadowFlag{v.id, static_cast<std::uint8_t>(line_of_sight(v.pos, bs.pos, map) ? 0 : 1)};
}

}  // namespace vanetsim
