#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "vanetsim/protocols/types.hpp"
#include "vanetsim/radio/radio.hpp"

namespace vanetsim {

/// Greedy maximum coverage over index sets.
///
/// Repeatedly takes the set adding the most uncovered elements (ties to the
/// lower set index) until everything is covered, nothing adds coverage, or
/// k_max sets are taken. Returns the chosen set indices in pick order.
inline std::vector<std::size_t> greedy_max_coverage(const std::vector<std::vector<std::uint32_t>>& sets,
                                                    std::size_t universe, std::size_t k_max) {
  std::vector<bool> covered(universe, false);
  std::vector<bool> used(sets.size(), false);
  std::vector<std::size_t> picks;
  std::size_t remaining = universe;
  while (picks.size() < k_max && remaining > 0) {
    std::size_t best = sets.size();
    std::size_t best_gain = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (used[i]) continue;
      std::size_t gain = 0;
      for (const auto e : sets[i]) gain += covered[e] ? 0 : 1;
      if (gain > best_gain) {
        best = i;
        best_gain = gain;
      }
    }
    if (best_gain == 0) break;
    used[best] = true;
    picks.push_back(best);
    for (const auto e : sets[best]) {
      if (!covered[e]) {
        covered[e] = true;
        --remaining;
      }
    }
  }
  return picks;
}

/// For each gateway, the positions in `shadowed` it reaches (radio range and line of sight).
inline std::vector<std::vector<std::uint32_t>> gateway_coverage(std::span<const VehicleState> shadowed,
                                                                std::span<const GatewayInfo> gateways,
                                                                const RadioParams& radio, const ObstacleMap& map) {
  std::vector<std::vector<std::uint32_t>> sets(gateways.size());
  for (std::size_t g = 0; g < gateways.size(); ++g) {
    for (std::uint32_t v = 0; v < shadowed.size(); ++v) {
      if (in_range(gateways[g].pos, shadowed[v].pos, radio) && line_of_sight(gateways[g].pos, shadowed[v].pos, map)) {
        sets[g].push_back(v);
      }
    }
  }
  return sets;
}

/// Picks the mobile gateways that cover the most shadowed vehicles.
/// Ties between gateways go to the smaller gateway id.
inline std::vector<VehicleId> select_gateways(std::span<const VehicleState> shadowed,
                                              std::vector<GatewayInfo> gateways, std::size_t k_max,
                                              const RadioParams& radio, const ObstacleMap& map) {
  std::sort(gateways.begin(), gateways.end(),
            [](const GatewayInfo& a, const GatewayInfo& b) { return index(a.gateway_id) < index(b.gateway_id); });
  const auto sets = gateway_coverage(shadowed, gateways, radio, map);
  std::vector<VehicleId> out;
  for (const auto i : greedy_max_coverage(sets, shadowed.size(), k_max)) out.push_back(gateways[i].gateway_id);
  return out;
}

}  // namespace vanetsim
