#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vanetsim/errors.hpp"
#include "vanetsim/geometry.hpp"
#include "vanetsim/mobility/types.hpp"
#include "vanetsim/sim/rng.hpp"
#include "vanetsim/sim/time.hpp"

namespace vanetsim {

/// DSRC link parameters. Defaults: 300 m range, 2 Mbps, 256-byte messages.
struct RadioParams {
  double range = 300.0;           // m
  double data_rate = 2'000'000.0; // bit/s
  std::uint32_t msg_size = 256;   // bytes
  double prop_speed = 3e8;        // m/s
  double base_loss = 0.02;
  double loss_slope = 0.001;      // per concurrent transmission
  SimTime max_backoff{2'000};     // contention backoff is uniform in [0, max_backoff]
  // Transmissions heard within this long before a reception's airtime count
  // towards its concurrent_tx; zero means strict airtime overlap only.
  SimTime load_window{100'000};
  // Backoff counts down only while the medium around the sender is idle.
  bool carrier_sense = true;
  // Unicast relay frames lost to the channel are resent up to this many times.
  std::uint32_t unicast_retries = 3;

  bool operator==(const RadioParams&) const = default;

  void validate() const {
    if (!(range > 0.0) || !std::isfinite(range)) throw ConfigError("radio.range: must be > 0");
    if (!(data_rate > 0.0) || !std::isfinite(data_rate)) throw ConfigError("radio.data_rate: must be > 0");
    if (msg_size == 0) throw ConfigError("radio.msg_size: must be > 0");
    if (!(prop_speed > 0.0) || !std::isfinite(prop_speed)) throw ConfigError("radio.prop_speed: must be > 0");
    if (!(base_loss >= 0.0 && base_loss <= 1.0)) throw ConfigError("radio.base_loss: must be in [0, 1]");
    if (!(loss_slope >= 0.0 && loss_slope <= 1.0)) throw ConfigError("radio.loss_slope: must be in [0, 1]");
  }
};

enum class LossCause : std::uint8_t { out_of_range, shadowed, channel_loss };

constexpr std::string_view to_string(LossCause c) {
  switch (c) {
    case LossCause::out_of_range: return "out_of_range";
    case LossCause::shadowed: return "shadowed";
    case LossCause::channel_loss: return "channel_loss";
  }
  return "?";
}

/// Result of one link attempt: either a delay or a loss cause, never both.
class HopOutcome {
 public:
  static HopOutcome ok(SimTime delay) { return HopOutcome(delay, std::nullopt); }
  static HopOutcome lost(LossCause cause) { return HopOutcome(std::nullopt, cause); }

  bool delivered() const { return delay_.has_value(); }
  SimTime delay() const { return delay_.value(); }
  LossCause loss_cause() const { return cause_.value(); }

  bool operator==(const HopOutcome&) const = default;

 private:
  HopOutcome(std::optional<SimTime> d, std::optional<LossCause> c) : delay_(d), cause_(c) {}
  std::optional<SimTime> delay_;
  std::optional<LossCause> cause_;
};

/// Building footprints used for line-of-sight tests.
class ObstacleMap {
 public:
  ObstacleMap() = default;

  void add(const Rect& r) {
    if (!(r.x_min < r.x_max && r.y_min < r.y_max) || !std::isfinite(r.area())) {
      throw ConfigError("obstacle rectangle must have positive area");
    }
    rects_.push_back(r);
  }

  const std::vector<Rect>& rects() const { return rects_; }
  bool empty() const { return rects_.empty(); }
  std::size_t size() const { return rects_.size(); }

  /// Area of the union of all rectangles clipped to `bounds`.
  double covered_area(const Rect& bounds) const {
    std::vector<double> xs{bounds.x_min, bounds.x_max};
    std::vector<double> ys{bounds.y_min, bounds.y_max};
    for (const auto& r : rects_) {
      xs.push_back(std::clamp(r.x_min, bounds.x_min, bounds.x_max));
      xs.push_back(std::clamp(r.x_max, bounds.x_min, bounds.x_max));
      ys.push_back(std::clamp(r.y_min, bounds.y_min, bounds.y_max));
      ys.push_back(std::clamp(r.y_max, bounds.y_min, bounds.y_max));
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
        const Position c{0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])};
        const bool covered = std::any_of(rects_.begin(), rects_.end(),
                                         [&](const Rect& r) { return r.interior_contains(c); });
        if (covered) area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
      }
    }
    return area;
  }

 private:
  std::vector<Rect> rects_;
};

/// Plain-text obstacle file: `x_min y_min x_max y_max` per line, `#` comments.
inline ObstacleMap parse_obstacles(std::istream& in, const std::string& source) {
  ObstacleMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<double> v;
    std::string token;
    while (fields >> token) {
      double value = 0.0;
      std::size_t used = 0;
      try {
        value = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size() || !std::isfinite(value)) {
        throw ParseError(source, line_no, "'" + token + "' is not a number");
      }
      v.push_back(value);
    }
    if (v.empty()) continue;
    if (v.size() != 4) {
      throw ParseError(source, line_no, "expected 4 values (x_min y_min x_max y_max), got " + std::to_string(v.size()));
    }
    const Rect r{v[0], v[1], v[2], v[3]};
    if (!(r.x_min < r.x_max && r.y_min < r.y_max)) {
      throw ParseError(source, line_no, "rectangle has no positive area");
    }
    map.add(r);
  }
  return map;
}

inline ObstacleMap load_obstacles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open obstacle file");
  return parse_obstacles(in, path);
}

/// One building per grid block, inset by `setback` from each street center line.
inline ObstacleMap grid_buildings(double side, double block, double setback) {
  if (!(setback >= 0.0) || 2.0 * setback >= block) {
    throw ConfigError("obstacles.grid_buildings.setback: must be in [0, grid_block/2)");
  }
  ObstacleMap map;
  const auto n = static_cast<int>(std::floor(side / block));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x0 = i * block;
      const double y0 = j * block;
      map.add(Rect{x0 + setback, y0 + setback, x0 + block - setback, y0 + block - setback});
    }
  }
  return map;
}

/// Euclidean distance <= range (inclusive boundary).
inline bool in_range(Position a, Position b, const RadioParams& p) { return distance(a, b) <= p.range; }

/// False iff segment a-b passes through the interior of some obstacle.
inline bool line_of_sight(Position a, Position b, const ObstacleMap& map) {
  return std::none_of(map.rects().begin(), map.rects().end(),
                      [&](const Rect& r) { return segment_crosses_interior(a, b, r); });
}

/// Airtime of a frame of `bytes` at the configured data rate.
inline SimTime transmission_time(const RadioParams& p, std::uint32_t bytes) {
  return SimTime{static_cast<std::uint64_t>(std::llround(static_cast<double>(bytes) * 8.0 * 1e6 / p.data_rate))};
}

/// transmission + propagation + backoff, rounded to whole microseconds, at least 1us.
inline SimTime hop_delay(const RadioParams& p, std::uint32_t bytes, double distance_m, SimTime backoff) {
  const double micros = static_cast<double>(bytes) * 8.0 * 1e6 / p.data_rate + distance_m * 1e6 / p.prop_speed;
  const auto rounded = static_cast<std::uint64_t>(std::llround(micros));
  return SimTime{std::max<std::uint64_t>(1, rounded + backoff.us)};
}

inline SimTime hop_delay(const RadioParams& p, double distance_m, SimTime backoff) {
  return hop_delay(p, p.msg_size, distance_m, backoff);
}

inline double loss_probability(const RadioParams& p, std::size_t concurrent_tx) {
  return std::min(1.0, p.base_loss + p.loss_slope * static_cast<double>(concurrent_tx));
}

/// True if the frame is lost; draws once from `rng` (the "radio-loss" stream).
inline bool channel_loss(const RadioParams& p, std::size_t concurrent_tx, RngStream& rng) {
  return rng.draw() < loss_probability(p, concurrent_tx);
}

/// Range and line-of-sight gating plus delay, before channel loss.
/// `range` overrides p.range for infrastructure links.
inline HopOutcome propagate(const RadioParams& p, const ObstacleMap& map, Position from, Position to,
                            std::uint32_t bytes, SimTime backoff, std::optional<double> range = std::nullopt) {
  const double d = distance(from, to);
  if (d > range.value_or(p.range)) return HopOutcome::lost(LossCause::out_of_range);
  if (!line_of_sight(from, to, map)) return HopOutcome::lost(LossCause::shadowed);
  return HopOutcome::ok(hop_delay(p, bytes, d, backoff));
}

inline HopOutcome unicast(const RadioParams& p, const ObstacleMap& map, Position from, Position to,
                          SimTime backoff, std::size_t concurrent_tx, RngStream& loss_rng) {
  HopOutcome out = propagate(p, map, from, to, p.msg_size, backoff);
  if (out.delivered() && channel_loss(p, concurrent_tx, loss_rng)) return HopOutcome::lost(LossCause::channel_loss);
  return out;
}

struct Reception {
  VehicleId receiver{};
  HopOutcome outcome;
};

/// Evaluates every node other than the sender once, in id order.
/// `concurrent(receiver)` supplies the load seen by each in-range receiver.
template <class ConcurrencyFn>
std::vector<Reception> broadcast(const RadioParams& p, const ObstacleMap& map, const VehicleState& sender,
                                 const std::vector<VehicleState>& nodes, SimTime backoff,
                                 ConcurrencyFn&& concurrent, RngStream& loss_rng) {
  std::vector<Reception> out;
  out.reserve(nodes.size());
  for (const auto& node : nodes) {
    if (node.id == sender.id) continue;
    HopOutcome o = propagate(p, map, sender.pos, node.pos, p.msg_size, backoff);
    if (o.delivered() && channel_loss(p, concurrent(node.id), loss_rng)) o = HopOutcome::lost(LossCause::channel_loss);
    out.push_back(Reception{node.id, o});
  }
  return out;
}

}  // namespace vanetsim
