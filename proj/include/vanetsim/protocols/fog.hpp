#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "vanetsim/errors.hpp"
#include "vanetsim/protocols/types.hpp"

namespace vanetsim {

/// Split/merge thresholds. A cell splits when its spread from the anchor
/// exceeds d_min or its member count exceeds th_cap.
struct FogParams {
  double d_min = 300.0;
  std::size_t th_cap = 20;

  bool operator==(const FogParams&) const = default;
};

struct MaintainReport {
  std::size_t joined = 0;
  std::size_t departed = 0;
  std::size_t splits = 0;
  std::size_t merges = 0;
  std::size_t passes = 0;          // passes that changed something
  std::size_t iteration_cap = 0;
};

class CellIdSource {
 public:
  CellId take() { return CellId{next_++}; }

 private:
  std::uint64_t next_ = 0;
};

/// Largest distance from the cell anchor to any member.
inline double dfcv_distance(const FogCell& cell, std::span<const VehicleState> snapshot) {
  const Position a = snapshot[index(cell.anchor)].pos;
  double d = 0.0;
  for (const auto m : cell.members) d = std::max(d, distance(a, snapshot[index(m)].pos));
  return d;
}

namespace detail {

inline Position centroid(const std::vector<VehicleId>& members, std::span<const VehicleState> snapshot) {
  Position c{};
  for (const auto m : members) {
    c.x += snapshot[index(m)].pos.x;
    c.y += snapshot[index(m)].pos.y;
  }
  const auto n = static_cast<double>(members.size());
  return Position{c.x / n, c.y / n};
}

inline VehicleId nearest_to(Position target, const std::vector<VehicleId>& members,
                            std::span<const VehicleState> snapshot) {
  VehicleId best = members.front();
  double best_d = distance(target, snapshot[index(best)].pos);
  for (const auto m : members) {
    const double d = distance(target, snapshot[index(m)].pos);
    if (d < best_d || (d == best_d && index(m) < index(best))) {
      best = m;
      best_d = d;
    }
  }
  return best;
}

inline bool needs_split(const FogCell& c, std::span<const VehicleState> snapshot, const FogParams& fp) {
  return c.capacity() >= 2 && (dfcv_distance(c, snapshot) > fp.d_min || c.capacity() > fp.th_cap);
}

// Near half (by distance to the anchor) keeps the anchor; the far half is
// re-anchored on its member closest to the far half's centroid.
inline FogCell split_cell(FogCell& cell, std::span<const VehicleState> snapshot, CellIdSource& ids) {
  const Position a = snapshot[index(cell.anchor)].pos;
  std::vector<VehicleId> order = cell.members;
  std::sort(order.begin(), order.end(), [&](VehicleId x, VehicleId y) {
    if (x == cell.anchor || y == cell.anchor) return x == cell.anchor && y != cell.anchor;
    const double dx = distance(a, snapshot[index(x)].pos);
    const double dy = distance(a, snapshot[index(y)].pos);
    return dx != dy ? dx < dy : index(x) < index(y);
  });
  const std::size_t near = (order.size() + 1) / 2;
  FogCell far;
  far.id = ids.take();
  far.station = cell.station;
  far.threshold = cell.threshold;
  far.members.assign(order.begin() + static_cast<std::ptrdiff_t>(near), order.end());
  far.anchor = nearest_to(centroid(far.members, snapshot), far.members, snapshot);
  cell.members.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(near));
  std::sort(cell.members.begin(), cell.members.end());
  std::sort(far.members.begin(), far.members.end());
  return far;
}

}  // namespace detail

/// Brings the cells of one base station in line with its current vehicles
/// and runs split/merge to a fixed point.
///
/// Membership first: members no longer associated with `station_vehicles`
/// leave (a cell that loses its anchor is re-anchored on the member nearest
/// its centroid; empty cells vanish), and newcomers join the nearest anchor
/// with room within d_min or else found a singleton cell. Then each pass
/// splits every over-spread or over-capacity cell once and merges pairs whose
/// combined size is below th_cap with anchors closer than d_min, as long as
/// the merged cell would not itself need splitting. Passes repeat until
/// nothing changes; more than 2*|cells|+2 changing passes is an error.
inline MaintainReport dfcv_maintain(std::vector<FogCell>& cells, StationId bs,
                                    std::span<const VehicleId> station_vehicles,
                                    std::span<const VehicleState> snapshot, const FogParams& fp,
                                    CellIdSource& ids) {
  MaintainReport report;
  std::unordered_set<std::uint32_t> present;
  for (const auto v : station_vehicles) present.insert(index(v));

  std::unordered_set<std::uint32_t> placed;
  for (auto& cell : cells) {
    const auto before = cell.members.size();
    std::erase_if(cell.members, [&](VehicleId m) { return !present.contains(index(m)); });
    report.departed += before - cell.members.size();
    if (cell.members.empty()) continue;
    if (!std::binary_search(cell.members.begin(), cell.members.end(), cell.anchor)) {
      cell.anchor = detail::nearest_to(detail::centroid(cell.members, snapshot), cell.members, snapshot);
    }
    for (const auto m : cell.members) placed.insert(index(m));
  }
  std::erase_if(cells, [](const FogCell& c) { return c.members.empty(); });

  std::vector<VehicleId> newcomers;
  for (const auto v : station_vehicles) {
    if (!placed.contains(index(v))) newcomers.push_back(v);
  }
  std::sort(newcomers.begin(), newcomers.end());
  for (const auto v : newcomers) {
    FogCell* best = nullptr;
    double best_d = 0.0;
    for (auto& cell : cells) {
      if (cell.capacity() >= fp.th_cap) continue;
      const double d = distance(snapshot[index(cell.anchor)].pos, snapshot[index(v)].pos);
      if (d > fp.d_min) continue;
      if (best == nullptr || d < best_d) {
        best = &cell;
        best_d = d;
      }
    }
    if (best != nullptr) {
      best->members.insert(std::upper_bound(best->members.begin(), best->members.end(), v), v);
    } else {
      cells.push_back(FogCell{ids.take(), bs, {v}, fp.th_cap, v});
    }
    ++report.joined;
  }

  report.iteration_cap = 2 * cells.size() + 2;
  const auto mergeable = [&](const FogCell& a, const FogCell& b) {
    if (a.capacity() + b.capacity() >= fp.th_cap) return false;
    if (distance(snapshot[index(a.anchor)].pos, snapshot[index(b.anchor)].pos) >= fp.d_min) return false;
    const Position pa = snapshot[index(a.anchor)].pos;
    return std::all_of(b.members.begin(), b.members.end(),
                       [&](VehicleId m) { return distance(pa, snapshot[index(m)].pos) <= fp.d_min; });
  };

  while (true) {
    bool changed = false;
    const std::size_t n = cells.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (detail::needs_split(cells[i], snapshot, fp)) {
        FogCell far = detail::split_cell(cells[i], snapshot, ids);
        cells.push_back(std::move(far));
        ++report.splits;
        changed = true;
      }
    }
    for (bool merged = true; merged;) {
      merged = false;
      for (std::size_t i = 0; i < cells.size() && !merged; ++i) {
        for (std::size_t j = i + 1; j < cells.size() && !merged; ++j) {
          if (!mergeable(cells[i], cells[j])) continue;
          auto& keep = cells[i].members;
          keep.insert(keep.end(), cells[j].members.begin(), cells[j].members.end());
          std::sort(keep.begin(), keep.end());
          cells.erase(cells.begin() + static_cast<std::ptrdiff_t>(j));
          ++report.merges;
          merged = changed = true;
        }
      }
    }
    if (!changed) break;
    if (++report.passes > report.iteration_cap) {
      throw SimError("fog maintenance at station " + std::to_string(index(bs)) + " did not converge within " +
                     std::to_string(report.iteration_cap) + " passes");
    }
  }
  return report;
}

/// Describes the first violated cell invariant, or nullopt if the cells
/// partition exactly `station_vehicles`.
inline std::optional<std::string> check_partition(std::span<const FogCell> cells, StationId bs,
                                                  std::span<const VehicleId> station_vehicles) {
  std::unordered_set<std::uint32_t> expected;
  for (const auto v : station_vehicles) expected.insert(index(v));
  std::unordered_set<std::uint32_t> seen;
  for (const auto& c : cells) {
    const std::string tag = "cell " + std::to_string(index(c.id));
    if (c.station != bs) return tag + " belongs to another station";
    if (c.members.empty()) return tag + " is empty";
    if (!std::binary_search(c.members.begin(), c.members.end(), c.anchor)) return tag + " anchor is not a member";
    for (const auto m : c.members) {
      if (!expected.contains(index(m))) return tag + " holds vehicle " + std::to_string(index(m)) + " not associated with the station";
      if (!seen.insert(index(m)).second) return "vehicle " + std::to_string(index(m)) + " is in two cells";
    }
  }
  if (seen.size() != expected.size()) return "cells cover " + std::to_string(seen.size()) + " of " + std::to_string(expected.size()) + " vehicles";
  return std::nullopt;
}

}  // namespace vanetsim
