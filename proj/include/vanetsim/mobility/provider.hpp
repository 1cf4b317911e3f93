#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <unordered_map>
#include <vector>

#include "vanetsim/errors.hpp"
#include "vanetsim/mobility/fcd.hpp"
#include "vanetsim/mobility/types.hpp"
#include "vanetsim/sim/rng.hpp"

namespace vanetsim {

/// Answers "where is vehicle v at time t" for one run. Immutable once built.
///
/// Synthetic vehicles keep the speed they were spawned with and drive along
/// one axis of a torus (highway: x, wrapping at road_length; grid: one street,
/// wrapping at the grid side). Trace vehicles are linearly interpolated
/// between their samples and clamped to the first/last sample outside them.
class MobilityProvider {
 public:
  static MobilityProvider build(const MobilitySpec& spec, RngStream& rng) {
    spec.validate();
    switch (spec.mode) {
      case MobilityMode::synthetic_highway: return highway(spec, rng);
      case MobilityMode::synthetic_grid: return grid(spec, rng);
      case MobilityMode::trace: {
        auto provider = from_trace(parse_fcd(*spec.trace_path), spec.gateway_fraction, rng);
        if (provider.size() != spec.vehicle_count) {
          throw ConfigError("mobility.vehicle_count: trace " + *spec.trace_path + " holds " +
                            std::to_string(provider.size()) + " vehicles, configuration asks for " +
                            std::to_string(spec.vehicle_count));
        }
        return provider;
      }
    }
    throw ConfigError("mobility.mode: unsupported");
  }

  static MobilityProvider from_trace(const std::vector<TraceSample>& samples, double gateway_fraction,
                                     RngStream& rng) {
    MobilityProvider p = ingest(samples);
    p.flag_gateways(gateway_fraction, rng);
    return p;
  }

  /// Trace vehicles with the gateways named explicitly.
  static MobilityProvider from_trace(const std::vector<TraceSample>& samples,
                                     const std::vector<std::string>& gateway_names) {
    MobilityProvider p = ingest(samples);
    for (const auto& name : gateway_names) {
      const auto it = std::find(p.names_.begin(), p.names_.end(), name);
      if (it == p.names_.end()) throw LookupError("no trace vehicle named " + name);
      p.gateway_[static_cast<std::size_t>(it - p.names_.begin())] = true;
    }
    return p;
  }

  /// Vehicles frozen at the given states (speed is reported but not applied).
  static MobilityProvider from_static(std::vector<VehicleState> states) {
    MobilityProvider p;
    p.mode_ = MobilityMode::trace;
    for (std::uint32_t i = 0; i < states.size(); ++i) {
      p.names_.push_back("v" + std::to_string(i));
      p.traces_.push_back({Knot{SimTime{}, states[i].pos, states[i].speed}});
      p.gateway_.push_back(states[i].is_gateway);
      p.static_heading_.push_back(states[i].heading);
    }
    p.compute_bounds();
    return p;
  }

  struct Placement {
    double x = 0.0;
    std::uint32_t lane = 0;
    double speed = 0.0;  // m/s, towards +x
    bool is_gateway = false;
  };

  /// Highway vehicles at chosen starting points, for hand-built scenarios.
  static MobilityProvider highway_placed(double road_length, std::uint32_t lanes, const std::vector<Placement>& cars) {
    if (!(road_length > 0.0)) throw ConfigError("mobility.road_length: must be > 0");
    if (lanes < 1) throw ConfigError("mobility.lanes: must be >= 1");
    MobilityProvider p;
    p.road_length_ = road_length;
    for (std::uint32_t i = 0; i < cars.size(); ++i) {
      if (cars[i].lane >= lanes) throw ConfigError("lane " + std::to_string(cars[i].lane) + " does not exist");
      Track tr;
      tr.start = wrap(cars[i].x, road_length);
      tr.offset = static_cast<double>(cars[i].lane) * kLaneWidth;
      tr.speed = cars[i].speed;
      p.tracks_.push_back(tr);
      p.names_.push_back("v" + std::to_string(i));
      p.gateway_.push_back(cars[i].is_gateway);
    }
    p.bounds_ = Rect{0.0, 0.0, road_length, static_cast<double>(lanes - 1) * kLaneWidth};
    return p;
  }

  std::size_t size() const { return names_.size(); }
  MobilityMode mode() const { return mode_; }
  const Rect& bounds() const { return bounds_; }
  double road_length() const { return road_length_; }
  double grid_block() const { return grid_block_; }

  const std::string& name(VehicleId id) const {
    check(id);
    return names_[index(id)];
  }

  bool is_gateway(VehicleId id) const {
    check(id);
    return gateway_[index(id)];
  }

  VehicleState position_at(VehicleId id, SimTime t) const {
    check(id);
    const auto i = index(id);
    VehicleState s;
    s.id = id;
    s.is_gateway = gateway_[i];
    if (!tracks_.empty()) {
      const Track& tr = tracks_[i];
      const double along = wrap(tr.start + tr.direction * tr.speed * t.seconds(), road_length_);
      s.pos = tr.horizontal ? Position{along, tr.offset} : Position{tr.offset, along};
      s.speed = tr.speed;
      s.heading = tr.heading;
      return s;
    }
    const auto& knots = traces_[i];
    if (knots.size() == 1) {
      s.pos = knots.front().pos;
      s.speed = knots.front().speed;
      s.heading = static_heading_.empty() ? 0.0 : static_heading_[i];
      return s;
    }
    if (t <= knots.front().time) {
      s.pos = knots.front().pos;
      s.speed = knots.front().speed;
      s.heading = heading_of(knots[0], knots[1]);
      return s;
    }
    if (t >= knots.back().time) {
      s.pos = knots.back().pos;
      s.speed = knots.back().speed;
      s.heading = heading_of(knots[knots.size() - 2], knots.back());
      return s;
    }
    const auto hi = std::upper_bound(knots.begin(), knots.end(), t,
                                     [](SimTime v, const Knot& k) { return v < k.time; });
    const Knot& b = *hi;
    const Knot& a = *(hi - 1);
    if (t == a.time) {
      s.pos = a.pos;
      s.speed = a.speed;
    } else {
      const double f = static_cast<double>(t.us - a.time.us) / static_cast<double>(b.time.us - a.time.us);
      s.pos = Position{a.pos.x + f * (b.pos.x - a.pos.x), a.pos.y + f * (b.pos.y - a.pos.y)};
      s.speed = a.speed + f * (b.speed - a.speed);
    }
    s.heading = heading_of(a, b);
    return s;
  }

  /// Every vehicle's state at t, indexed by vehicle id.
  std::vector<VehicleState> snapshot(SimTime t) const {
    std::vector<VehicleState> out;
    snapshot_into(t, out);
    return out;
  }

  void snapshot_into(SimTime t, std::vector<VehicleState>& out) const {
    out.resize(size());
    for (std::uint32_t i = 0; i < size(); ++i) out[i] = position_at(vehicle(i), t);
  }

 private:
  struct Track {
    double start = 0.0;      // coordinate along the direction of travel at t=0
    double offset = 0.0;     // fixed cross coordinate (lane or street)
    double direction = 1.0;  // +1 or -1
    double speed = 0.0;
    double heading = 0.0;
    bool horizontal = true;
  };

  struct Knot {
    SimTime time;
    Position pos;
    double speed = 0.0;
  };

  MobilityProvider() = default;

  static MobilityProvider ingest(const std::vector<TraceSample>& samples) {
    MobilityProvider p;
    p.mode_ = MobilityMode::trace;
    std::unordered_map<std::string, std::uint32_t> ids;
    for (const auto& s : samples) {
      const auto [it, inserted] = ids.try_emplace(s.vehicle_id, static_cast<std::uint32_t>(p.names_.size()));
      if (inserted) {
        p.names_.push_back(s.vehicle_id);
        p.traces_.emplace_back();
      }
      auto& trace = p.traces_[it->second];
      if (!trace.empty() && s.time <= trace.back().time) {
        throw ParseError(s.vehicle_id, 0, "trace samples are not strictly increasing in time");
      }
      trace.push_back(Knot{s.time, s.pos, s.speed});
    }
    p.gateway_.assign(p.names_.size(), false);
    p.compute_bounds();
    return p;
  }

  static double wrap(double v, double length) {
    double w = std::fmod(v, length);
    if (w < 0.0) w += length;
    return w >= length ? 0.0 : w;
  }

  static double heading_of(const Knot& a, const Knot& b) {
    return std::atan2(b.pos.y - a.pos.y, b.pos.x - a.pos.x);
  }

  void check(VehicleId id) const {
    if (index(id) >= names_.size()) {
      throw LookupError("unknown vehicle id " + std::to_string(index(id)));
    }
  }

  static double draw_speed(const MobilitySpec& spec, RngStream& rng) {
    const double lo = mph_to_mps(spec.speed_range_mph[0]);
    const double hi = mph_to_mps(spec.speed_range_mph[1]);
    return lo == hi ? lo : rng.uniform(lo, hi);
  }

  static MobilityProvider highway(const MobilitySpec& spec, RngStream& rng) {
    MobilityProvider p;
    p.mode_ = spec.mode;
    p.road_length_ = spec.road_length;
    for (std::uint32_t i = 0; i < spec.vehicle_count; ++i) {
      Track tr;
      tr.start = rng.uniform(0.0, spec.road_length);
      tr.offset = static_cast<double>(rng.below(spec.lanes)) * kLaneWidth;
      tr.speed = draw_speed(spec, rng);
      p.tracks_.push_back(tr);
      p.names_.push_back("v" + std::to_string(i));
    }
    p.gateway_.assign(p.names_.size(), false);
    p.flag_gateways(spec.gateway_fraction, rng);
    p.bounds_ = Rect{0.0, 0.0, spec.road_length, static_cast<double>(spec.lanes - 1) * kLaneWidth};
    return p;
  }

  static MobilityProvider grid(const MobilitySpec& spec, RngStream& rng) {
    MobilityProvider p;
    p.mode_ = spec.mode;
    p.road_length_ = spec.road_length;
    p.grid_block_ = spec.grid_block;
    const auto streets = static_cast<std::uint64_t>(std::floor(spec.road_length / spec.grid_block));
    for (std::uint32_t i = 0; i < spec.vehicle_count; ++i) {
      Track tr;
      tr.horizontal = rng.draw() < 0.5;
      tr.offset = static_cast<double>(rng.below(streets)) * spec.grid_block;
      tr.start = rng.uniform(0.0, spec.road_length);
      tr.direction = rng.draw() < 0.5 ? 1.0 : -1.0;
      tr.speed = draw_speed(spec, rng);
      tr.heading = tr.horizontal ? (tr.direction > 0 ? 0.0 : std::numbers::pi)
                                 : (tr.direction > 0 ? std::numbers::pi / 2 : -std::numbers::pi / 2);
      p.tracks_.push_back(tr);
      p.names_.push_back("v" + std::to_string(i));
    }
    p.gateway_.assign(p.names_.size(), false);
    p.flag_gateways(spec.gateway_fraction, rng);
    p.bounds_ = Rect{0.0, 0.0, spec.road_length, spec.road_length};
    return p;
  }

  // round(fraction * N) vehicles, chosen by a partial Fisher-Yates shuffle.
  void flag_gateways(double fraction, RngStream& rng) {
    const auto n = names_.size();
    const auto count = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
    std::vector<std::uint32_t> order(n);
    for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t k = 0; k < count; ++k) {
      const auto j = k + static_cast<std::size_t>(rng.below(n - k));
      std::swap(order[k], order[j]);
      gateway_[order[k]] = true;
    }
  }

  void compute_bounds() {
    bool first = true;
    for (const auto& trace : traces_) {
      for (const auto& k : trace) {
        if (first) {
          bounds_ = Rect{k.pos.x, k.pos.y, k.pos.x, k.pos.y};
          first = false;
        }
        bounds_.x_min = std::min(bounds_.x_min, k.pos.x);
        bounds_.y_min = std::min(bounds_.y_min, k.pos.y);
        bounds_.x_max = std::max(bounds_.x_max, k.pos.x);
        bounds_.y_max = std::max(bounds_.y_max, k.pos.y);
      }
    }
    road_length_ = std::max(bounds_.x_max - bounds_.x_min, bounds_.y_max - bounds_.y_min);
  }

  MobilityMode mode_ = MobilityMode::synthetic_highway;
  std::vector<std::string> names_;
  std::vector<bool> gateway_;
  std::vector<Track> tracks_;
  std::vector<std::vector<Knot>> traces_;
  std::vector<double> static_heading_;
  Rect bounds_{};
  double road_length_ = 0.0;
  double grid_block_ = 0.0;
};

}  // namespace vanetsim
