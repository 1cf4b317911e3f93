#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vanetsim/errors.hpp"
#include "vanetsim/mobility/types.hpp"
#include "vanetsim/protocols/simulation.hpp"
#include "vanetsim/radio/radio.hpp"

namespace vanetsim {

using Json = nlohmann::json;

struct ObstacleSpec {
  std::optional<std::string> file;     // absolute after loading
  std::vector<Rect> rects;             // inline rectangles
  std::optional<double> grid_setback;  // city blocks of the synthetic grid

  bool operator==(const ObstacleSpec&) const = default;
};

struct ScenarioConfig {
  MobilitySpec mobility;
  RadioParams radio;
  ObstacleSpec obstacles;
  std::vector<Protocol> protocols{Protocol::baseline, Protocol::hybrid_vehcloud, Protocol::dfcv};
  std::vector<std::uint32_t> densities{50, 150, 250, 350, 450};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  SimTime sim_duration{60'000'000};
  SimTime drain{1'000'000};
  Workload workload;
  ProtocolParams knobs;
  std::vector<BaseStation> base_stations;  // empty: lattice placement
  unsigned jobs = 1;

  bool operator==(const ScenarioConfig&) const = default;
};

inline std::string_view to_string(MobilityMode m) {
  switch (m) {
    case MobilityMode::synthetic_highway: return "synthetic_highway";
    case MobilityMode::synthetic_grid: return "synthetic_grid";
    case MobilityMode::trace: return "trace";
  }
  return "?";
}

namespace detail {

/// Reads one JSON object, remembering which keys were consumed so that
/// leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const Json& value, std::string path) : value_(value), path_(std::move(path)) {
    if (!value_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = value_.find(key);
    return it == value_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const Json* v = find(key)) out = as_number(*v, key_path(key));
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (const Json* v = find(key)) out = as_integer<Int>(*v, key_path(key));
  }

  void boolean(const std::string& key, bool& out) {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(key_path(key) + ": expected true or false");
      out = v->get<bool>();
    }
  }

  void text(const std::string& key, std::string& out) {
    if (const Json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(key_path(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }

  void micros(const std::string& key, SimTime& out) {
    if (const Json* v = find(key)) out = SimTime{as_integer<std::uint64_t>(*v, key_path(key))};
  }

  void seconds(const std::string& key, SimTime& out) {
    if (const Json* v = find(key)) {
      const double s = as_number(*v, key_path(key));
      if (s < 0.0) throw ConfigError(key_path(key) + ": must be >= 0");
      out = SimTime::from_seconds(s);
    }
  }

  void finish() const {
    for (const auto& [key, _] : value_.items()) {
      if (!seen_.contains(key)) throw ConfigError(key_path(key) + ": unknown key");
    }
  }

  static double as_number(const Json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path + ": expected a finite number");
    return d;
  }

  template <class Int>
  static Int as_integer(const Json& v, const std::string& path) {
    if (v.is_number_unsigned()) {
      const auto u = v.get<std::uint64_t>();
      if (u <= std::numeric_limits<Int>::max()) return static_cast<Int>(u);
    } else if (v.is_number_integer()) {
      throw ConfigError(path + ": must be >= 0");
    } else if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0.0 && std::floor(d) == d && d <= static_cast<double>(std::numeric_limits<Int>::max())) {
        return static_cast<Int>(d);
      }
      throw ConfigError(path + ": expected a non-negative integer");
    } else {
      throw ConfigError(path + ": expected a non-negative integer");
    }
    throw ConfigError(path + ": integer out of range");
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const Json& value_;
  std::string path_;
  std::set<std::string> seen_;
};

inline const Json& expect_array(const Json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array");
  return v;
}

inline std::string absolute_from(const std::string& path, const std::filesystem::path& base) {
  std::filesystem::path p(path);
  if (p.is_relative()) p = base / p;
  return p.lexically_normal().string();
}

inline void require_readable(const std::string& path, const std::string& key) {
  std::ifstream in(path);
  if (!in) throw ConfigError(key + ": cannot read " + path);
}

inline void read_mobility(ObjectReader& r, MobilitySpec& m, const std::filesystem::path& base) {
  if (const Json* v = r.find("mode")) {
    const std::string mode = v->is_string() ? v->get<std::string>() : "";
    if (mode == "synthetic_highway") {
      m.mode = MobilityMode::synthetic_highway;
    } else if (mode == "synthetic_grid") {
      m.mode = MobilityMode::synthetic_grid;
    } else if (mode == "trace") {
      m.mode = MobilityMode::trace;
    } else {
      throw ConfigError(r.key_path("mode") + ": expected synthetic_highway, synthetic_grid or trace");
    }
  }
  r.number("road_length", m.road_length);
  r.integer("lanes", m.lanes);
  r.number("grid_block", m.grid_block);
  if (const Json* v = r.find("speed_range_mph")) {
    const std::string path = r.key_path("speed_range_mph");
    if (!v->is_array() || v->size() != 2) throw ConfigError(path + ": expected [min, max]");
    m.speed_range_mph = {ObjectReader::as_number((*v)[0], path + "[0]"), ObjectReader::as_number((*v)[1], path + "[1]")};
  }
  if (const Json* v = r.find("trace_path")) {
    if (!v->is_string()) throw ConfigError(r.key_path("trace_path") + ": expected a string");
    m.trace_path = absolute_from(v->get<std::string>(), base);
  }
  r.finish();
}

inline void read_radio(ObjectReader& r, RadioParams& p) {
  r.number("range", p.range);
  r.number("data_rate", p.data_rate);
  r.integer("msg_size", p.msg_size);
  r.number("prop_speed", p.prop_speed);
  r.number("base_loss", p.base_loss);
  r.number("loss_slope", p.loss_slope);
  r.micros("max_backoff_us", p.max_backoff);
  r.micros("load_window_us", p.load_window);
  r.boolean("carrier_sense", p.carrier_sense);
  r.integer("unicast_retries", p.unicast_retries);
  r.finish();
}

inline Rect read_rect(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 4) throw ConfigError(path + ": expected [x_min, y_min, x_max, y_max]");
  Rect rect{ObjectReader::as_number(v[0], path + "[0]"), ObjectReader::as_number(v[1], path + "[1]"),
            ObjectReader::as_number(v[2], path + "[2]"), ObjectReader::as_number(v[3], path + "[3]")};
  if (!(rect.x_max > rect.x_min && rect.y_max > rect.y_min)) {
    throw ConfigError(path + ": rectangle must have positive area");
  }
  return rect;
}

inline void read_obstacles(ObjectReader& r, ObstacleSpec& o, const std::filesystem::path& base) {
  if (const Json* v = r.find("file")) {
    if (!v->is_string()) throw ConfigError(r.key_path("file") + ": expected a string");
    o.file = absolute_from(v->get<std::string>(), base);
  }
  if (const Json* v = r.find("rects")) {
    const std::string path = r.key_path("rects");
    expect_array(*v, path);
    o.rects.clear();
    for (std::size_t i = 0; i < v->size(); ++i) o.rects.push_back(read_rect((*v)[i], path + "[" + std::to_string(i) + "]"));
  }
  if (const Json* v = r.find("grid_buildings")) {
    ObjectReader g(*v, r.key_path("grid_buildings"));
    double setback = 0.0;
    g.number("setback", setback);
    g.finish();
    o.grid_setback = setback;
  }
  r.finish();
}

inline void read_workload(ObjectReader& r, Workload& w) {
  r.number("rate", w.rate);
  if (const Json* v = r.find("kind")) {
    const std::string kind = v->is_string() ? v->get<std::string>() : "";
    if (kind == "event_driven") {
      w.kind = MessageKind::event_driven;
    } else if (kind == "beacon") {
      w.kind = MessageKind::beacon;
    } else {
      throw ConfigError(r.key_path("kind") + ": expected event_driven or beacon");
    }
  }
  if (const Json* v = r.find("target")) {
    const std::string target = v->is_string() ? v->get<std::string>() : "";
    if (target == "bs_region") {
      w.target = TargetSelection::bs_region;
    } else if (target == "all") {
      w.target = TargetSelection::all;
    } else {
      throw ConfigError(r.key_path("target") + ": expected bs_region or all");
    }
  }
  r.boolean("include_beacons", w.include_beacons);
  r.micros("beacon_interval_us", w.beacon_interval);
  r.finish();
}

inline void read_knobs(ObjectReader& r, ScenarioConfig& cfg) {
  ProtocolParams& k = cfg.knobs;
  r.integer("ttl", k.ttl_hops);
  r.integer("th_cap", k.fog.th_cap);
  r.number("d_min", k.fog.d_min);
  r.number("gateway_fraction", cfg.mobility.gateway_fraction);
  r.integer("k_max", k.k_max);
  r.seconds("window_s", k.window);
  r.number("bs_coverage", k.bs_coverage);
  r.number("bs_spacing", k.bs_spacing);
  if (const Json* v = r.find("base_stations")) {
    const std::string path = r.key_path("base_stations");
    expect_array(*v, path);
    cfg.base_stations.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string at = path + "[" + std::to_string(i) + "]";
      const Json& p = (*v)[i];
      if (!p.is_array() || p.size() != 2) throw ConfigError(at + ": expected [x, y]");
      cfg.base_stations.push_back(BaseStation{StationId{static_cast<std::uint32_t>(i)},
                                              Position{ObjectReader::as_number(p[0], at + "[0]"),
                                                       ObjectReader::as_number(p[1], at + "[1]")}});
    }
  }
  r.micros("fog_processing_us", k.fog_processing);
  if (const Json* v = r.find("cloud")) {
    ObjectReader c(*v, r.key_path("cloud"));
    c.micros("uplink_us", k.cloud.uplink_latency);
    c.micros("downlink_us", k.cloud.downlink_latency);
    c.micros("processing_us", k.cloud.processing_latency);
    c.finish();
  }
  r.micros("gateway_access_delay_us", k.gateway_access_delay);
  r.number("gateway_bandwidth", k.gateway_bandwidth);
  r.micros("route_setup_delay_us", k.route_setup_delay);
  r.seconds("fog_maintenance_interval_s", k.fog_maintenance_interval);
  r.seconds("mobility_tick_s", k.mobility_tick);
  r.finish();
}

}  // namespace detail

/// Checks cross-field rules and that referenced files can be opened.
inline void validate(const ScenarioConfig& cfg) {
  cfg.radio.validate();
  cfg.knobs.validate();
  if (cfg.densities.empty()) throw ConfigError("densities: must not be empty");
  for (std::size_t i = 0; i < cfg.densities.size(); ++i) {
    if (cfg.densities[i] < 1 || cfg.densities[i] > 10'000) {
      throw ConfigError("densities[" + std::to_string(i) + "]: must be in [1, 10000]");
    }
  }
  if (cfg.seeds.empty()) throw ConfigError("seeds: must not be empty");
  if (cfg.protocols.empty()) throw ConfigError("protocols: must not be empty");
  if (cfg.sim_duration.us == 0) throw ConfigError("sim_duration_s: must be > 0");
  if (cfg.jobs < 1) throw ConfigError("jobs: must be >= 1");
  if (!(cfg.workload.rate >= 0.0)) throw ConfigError("workload.rate: must be >= 0");
  MobilitySpec probe = cfg.mobility;
  probe.vehicle_count = cfg.densities.front();
  probe.validate();
  if (cfg.mobility.trace_path) detail::require_readable(*cfg.mobility.trace_path, "mobility.trace_path");
  if (cfg.obstacles.file) detail::require_readable(*cfg.obstacles.file, "obstacles.file");
  if (cfg.obstacles.grid_setback) {
    if (cfg.mobility.mode != MobilityMode::synthetic_grid) {
      throw ConfigError("obstacles.grid_buildings: requires mobility.mode synthetic_grid");
    }
    const double s = *cfg.obstacles.grid_setback;
    if (!(s >= 0.0 && s < cfg.mobility.grid_block / 2.0)) {
      throw ConfigError("obstacles.grid_buildings.setback: must be in [0, grid_block / 2)");
    }
  }
}

/// Parses a configuration document. Relative file paths are resolved against `base_dir`.
inline ScenarioConfig parse_config(const Json& doc, const std::filesystem::path& base_dir = ".") {
  ScenarioConfig cfg;
  detail::ObjectReader root(doc, "");
  if (const Json* v = root.find("mobility")) {
    detail::ObjectReader r(*v, "mobility");
    detail::read_mobility(r, cfg.mobility, base_dir);
  }
  if (const Json* v = root.find("radio")) {
    detail::ObjectReader r(*v, "radio");
    detail::read_radio(r, cfg.radio);
  }
  if (const Json* v = root.find("obstacles")) {
    detail::ObjectReader r(*v, "obstacles");
    detail::read_obstacles(r, cfg.obstacles, base_dir);
  }
  if (const Json* v = root.find("protocols")) {
    detail::expect_array(*v, "protocols");
    cfg.protocols.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const Json& p = (*v)[i];
      const auto parsed = p.is_string() ? protocol_from_string(p.get<std::string>()) : std::nullopt;
      if (!parsed) {
        throw ConfigError("protocols[" + std::to_string(i) + "]: expected baseline, hybrid_vehcloud or dfcv");
      }
      if (std::find(cfg.protocols.begin(), cfg.protocols.end(), *parsed) != cfg.protocols.end()) {
        throw ConfigError("protocols[" + std::to_string(i) + "]: listed twice");
      }
      cfg.protocols.push_back(*parsed);
    }
  }
  if (const Json* v = root.find("densities")) {
    detail::expect_array(*v, "densities");
    cfg.densities.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      cfg.densities.push_back(
          detail::ObjectReader::as_integer<std::uint32_t>((*v)[i], "densities[" + std::to_string(i) + "]"));
    }
  }
  if (const Json* v = root.find("seeds")) {
    detail::expect_array(*v, "seeds");
    cfg.seeds.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      cfg.seeds.push_back(detail::ObjectReader::as_integer<std::uint64_t>((*v)[i], "seeds[" + std::to_string(i) + "]"));
    }
  }
  root.seconds("sim_duration_s", cfg.sim_duration);
  root.seconds("drain_s", cfg.drain);
  root.integer("jobs", cfg.jobs);
  if (const Json* v = root.find("workload")) {
    detail::ObjectReader r(*v, "workload");
    detail::read_workload(r, cfg.workload);
  }
  if (const Json* v = root.find("protocol")) {
    detail::ObjectReader r(*v, "protocol");
    detail::read_knobs(r, cfg);
  }
  root.finish();
  validate(cfg);
  return cfg;
}

inline ScenarioConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir = ".") {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config: syntax error: ") + e.what());
  }
  return parse_config(doc, base_dir);
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config_text(text.str(), std::filesystem::absolute(path).parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// The fully resolved configuration; parse_config(to_json(c)) == c.
inline Json to_json(const ScenarioConfig& cfg) {
  const auto seconds = [](SimTime t) { return static_cast<double>(t.us) / 1e6; };
  Json mobility{{"mode", to_string(cfg.mobility.mode)},
                {"road_length", cfg.mobility.road_length},
                {"lanes", cfg.mobility.lanes},
                {"grid_block", cfg.mobility.grid_block},
                {"speed_range_mph", {cfg.mobility.speed_range_mph[0], cfg.mobility.speed_range_mph[1]}}};
  if (cfg.mobility.trace_path) mobility["trace_path"] = *cfg.mobility.trace_path;

  const RadioParams& r = cfg.radio;
  Json radio{{"range", r.range},
             {"data_rate", r.data_rate},
             {"msg_size", r.msg_size},
             {"prop_speed", r.prop_speed},
             {"base_loss", r.base_loss},
             {"loss_slope", r.loss_slope},
             {"max_backoff_us", r.max_backoff.us},
             {"load_window_us", r.load_window.us},
             {"carrier_sense", r.carrier_sense},
             {"unicast_retries", r.unicast_retries}};

  Json obstacles = Json::object();
  if (cfg.obstacles.file) obstacles["file"] = *cfg.obstacles.file;
  Json rects = Json::array();
  for (const Rect& b : cfg.obstacles.rects) rects.push_back({b.x_min, b.y_min, b.x_max, b.y_max});
  obstacles["rects"] = rects;
  if (cfg.obstacles.grid_setback) obstacles["grid_buildings"] = {{"setback", *cfg.obstacles.grid_setback}};

  Json protocols = Json::array();
  for (const auto p : cfg.protocols) protocols.push_back(std::string(to_string(p)));

  const Workload& w = cfg.workload;
  Json workload{{"rate", w.rate},
                {"kind", std::string(to_string(w.kind))},
                {"target", w.target == TargetSelection::all ? "all" : "bs_region"},
                {"include_beacons", w.include_beacons},
                {"beacon_interval_us", w.beacon_interval.us}};

  const ProtocolParams& k = cfg.knobs;
  Json stations = Json::array();
  for (const auto& bs : cfg.base_stations) stations.push_back({bs.pos.x, bs.pos.y});
  Json knobs{{"ttl", k.ttl_hops},
             {"th_cap", k.fog.th_cap},
             {"d_min", k.fog.d_min},
             {"gateway_fraction", cfg.mobility.gateway_fraction},
             {"k_max", k.k_max},
             {"window_s", seconds(k.window)},
             {"bs_coverage", k.bs_coverage},
             {"bs_spacing", k.bs_spacing},
             {"base_stations", stations},
             {"fog_processing_us", k.fog_processing.us},
             {"cloud",
              {{"uplink_us", k.cloud.uplink_latency.us},
               {"downlink_us", k.cloud.downlink_latency.us},
               {"processing_us", k.cloud.processing_latency.us}}},
             {"gateway_access_delay_us", k.gateway_access_delay.us},
             {"gateway_bandwidth", k.gateway_bandwidth},
             {"route_setup_delay_us", k.route_setup_delay.us},
             {"fog_maintenance_interval_s", seconds(k.fog_maintenance_interval)},
             {"mobility_tick_s", seconds(k.mobility_tick)}};

  return Json{{"mobility", mobility},
              {"radio", radio},
              {"obstacles", obstacles},
              {"protocols", protocols},
              {"densities", cfg.densities},
              {"seeds", cfg.seeds},
              {"sim_duration_s", seconds(cfg.sim_duration)},
              {"drain_s", seconds(cfg.drain)},
              {"jobs", cfg.jobs},
              {"workload", workload},
              {"protocol", knobs}};
}

/// Obstacles from the file, inline rectangles and synthetic city blocks, in that order.
inline ObstacleMap build_obstacles(const ScenarioConfig& cfg) {
  ObstacleMap map;
  if (cfg.obstacles.file) map = load_obstacles(*cfg.obstacles.file);
  for (const Rect& r : cfg.obstacles.rects) map.add(r);
  if (cfg.obstacles.grid_setback) {
    for (const Rect& r : grid_buildings(cfg.mobility.road_length, cfg.mobility.grid_block, *cfg.obstacles.grid_setback).rects()) {
      map.add(r);
    }
  }
  return map;
}

}  // namespace vanetsim
