#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "vanetsim/errors.hpp"
#include "vanetsim/metrics/metrics.hpp"
#include "vanetsim/mobility/provider.hpp"
#include "vanetsim/protocols/discovery.hpp"
#include "vanetsim/protocols/fog.hpp"
#include "vanetsim/protocols/gateways.hpp"
#include "vanetsim/protocols/types.hpp"
#include "vanetsim/radio/load.hpp"
#include "vanetsim/radio/radio.hpp"
#include "vanetsim/sim/rng.hpp"
#include "vanetsim/sim/scheduler.hpp"

namespace vanetsim {

/// Protocol knobs. None of these are fixed by measurement; they are the
/// calibration surface of the simulator.
struct ProtocolParams {
  std::uint32_t ttl_hops = 8;
  FogParams fog;
  CloudModel cloud;
  SimTime fog_processing{5'000};
  SimTime gateway_access_delay{2'000};
  double gateway_bandwidth = 6e6;
  std::size_t k_max = 10;
  SimTime window{5'000'000};  // late joiners are served this long after origin
  double bs_coverage = 1'000.0;
  double bs_spacing = 2'000.0;
  SimTime route_setup_delay{0};  // baseline flood only
  SimTime fog_maintenance_interval{1'000'000};
  SimTime mobility_tick{250'000};

  bool operator==(const ProtocolParams&) const = default;

  void validate() const {
    if (ttl_hops < 1) throw ConfigError("protocol.ttl: must be >= 1");
    if (fog.th_cap < 1) throw ConfigError("protocol.th_cap: must be >= 1");
    if (!(fog.d_min > 0.0)) throw ConfigError("protocol.d_min: must be > 0");
    if (!(bs_coverage > 0.0)) throw ConfigError("protocol.bs_coverage: must be > 0");
    if (!(bs_spacing > 0.0)) throw ConfigError("protocol.bs_spacing: must be > 0");
    if (!(gateway_bandwidth > 0.0)) throw ConfigError("protocol.gateway_bandwidth: must be > 0");
    if (k_max < 1) throw ConfigError("protocol.k_max: must be >= 1");
    if (fog_maintenance_interval.us == 0) throw ConfigError("protocol.fog_maintenance_interval_s: must be > 0");
    if (mobility_tick.us == 0) throw ConfigError("protocol.mobility_tick_s: must be > 0");
  }
};

enum class TargetSelection : std::uint8_t { bs_region, all };

struct Workload {
  double rate = 1.0;  // messages per second, each from a uniformly drawn source
  MessageKind kind = MessageKind::event_driven;
  TargetSelection target = TargetSelection::bs_region;
  bool include_beacons = false;
  SimTime beacon_interval{100'000};  // zero disables beacons

  bool operator==(const Workload&) const = default;
};

struct RunSpec {
  Protocol protocol = Protocol::baseline;
  RadioParams radio;
  ProtocolParams knobs;
  Workload workload;
  SimTime duration{60'000'000};
  SimTime drain{1'000'000};
  std::uint64_t seed = 1;
  std::uint64_t event_budget = kDefaultEventBudget;
  std::vector<BaseStation> stations;  // empty: lattice from knobs.bs_spacing
};

struct FogStats {
  std::size_t maintain_calls = 0;
  std::size_t violations = 0;
  std::size_t max_passes = 0;
  std::optional<std::string> first_violation;
};

struct RunResult {
  std::vector<DeliveryRecord> records;
  RunStats stats;
  FogStats fog;
  std::size_t messages = 0;
};

/// One simulation run of one protocol over one mobility realisation.
///
/// Baseline: the source broadcasts and every first-time receiver rebroadcasts
/// once while hops remain. Hybrid-Vehcloud: vehicles in the sender's station
/// region are classified by line of sight to their station; the source's
/// direct broadcast serves the visible ones and shadowed ones are reached
/// through a bus gateway, the vehicular cloud, and the gateways the cloud
/// selects for coverage; vehicles entering the region within the window are
/// served the same way. DFCV: the source sends to its station's fog node,
/// which sends one group-addressed frame per fog cell holding recipients and
/// reaches recipients under other stations through the cloud.
class Simulation {
 public:
  using FogObserver =
      std::function<void(SimTime, StationId, std::span<const FogCell>, std::span<const VehicleState>)>;

  Simulation(RunSpec spec, const MobilityProvider& mobility, const ObstacleMap& obstacles, EventLog log = {})
      : spec_(std::move(spec)),
        mobility_(mobility),
        obstacles_(obstacles),
        log_(log),
        scheduler_(spec_.event_budget),
        workload_rng_(spec_.seed, "workload"),
        loss_rng_(spec_.seed, "radio-loss"),
        backoff_rng_(spec_.seed, "mac-backoff"),
        beacon_rng_(spec_.seed, "beacon"),
        load_(spec_.radio.range, spec_.radio.load_window + spec_.radio.max_backoff +
                                     transmission_time(spec_.radio, spec_.radio.msg_size) + SimTime{10'000}) {
    spec_.radio.validate();
    spec_.knobs.validate();
    if (spec_.stations.empty()) {
      spec_.stations = place_stations(mobility_.mode(), mobility_.bounds(), spec_.knobs.bs_spacing,
                                      mobility_.grid_block());
    }
    cells_.resize(spec_.stations.size());
    rsu_busy_.assign(spec_.stations.size(), SimTime{});
    member_of_.assign(mobility_.size(), std::nullopt);
  }

  const std::vector<BaseStation>& stations() const { return spec_.stations; }
  const RunSpec& spec() const { return spec_; }

  void set_fog_observer(FogObserver observer) { fog_observer_ = std::move(observer); }

  /// Queues a message in addition to the configured workload.
  MessageId inject(VehicleId src, SimTime at, TargetRule targets = AllInRegion{},
                   std::optional<std::uint32_t> ttl = std::nullopt) {
    mobility_.position_at(src, at);  // validates the id
    Message m;
    m.id = MessageId{messages_.size()};
    m.kind = spec_.workload.kind;
    m.src = src;
    m.origin_time = at;
    m.size = spec_.radio.msg_size;
    m.targets = std::move(targets);
    m.ttl_hops = ttl.value_or(spec_.knobs.ttl_hops);
    if (m.ttl_hops < 1) throw ConfigError("ttl_hops must be >= 1");
    messages_.emplace_back().msg = std::move(m);
    scheduler_.schedule(at, EventKind::MessageInject, InjectEv{messages_.back().msg.id});
    return messages_.back().msg.id;
  }

  RunResult run() {
    if (ran_) throw SimError("a Simulation can only run once");
    ran_ = true;
    schedule_workload();
    if (spec_.workload.beacon_interval.us > 0) {
      for (std::uint32_t i = 0; i < mobility_.size(); ++i) {
        const SimTime phase{beacon_rng_.below(spec_.workload.beacon_interval.us)};
        if (phase < spec_.duration) scheduler_.schedule(phase, EventKind::BeaconEmit, BeaconEv{vehicle(i)});
      }
    }
    if (spec_.protocol == Protocol::hybrid_vehcloud && spec_.knobs.mobility_tick < spec_.duration) {
      scheduler_.schedule(spec_.knobs.mobility_tick, EventKind::MobilityTick, TickEv{});
    }
    if (spec_.protocol == Protocol::dfcv) {
      scheduler_.schedule(SimTime{}, EventKind::FogMaintenance, FogTickEv{});
    }
    const SimTime end = spec_.duration + spec_.drain;
    scheduler_.schedule(end, EventKind::SimEnd, EndEv{});

    RunResult result;
    result.stats = scheduler_.run(end, [this](const Ev& ev, Sched&) { dispatch(ev); });
    result.fog = fog_stats_;
    result.messages = messages_.size();
    result.records = records();
    return result;
  }

  /// Vehicles that received message `id` (including its source), ascending.
  std::vector<VehicleId> holders(MessageId id) const {
    const auto& holds = message(id).holds;
    std::vector<VehicleId> out;
    for (const auto v : holds) out.push_back(vehicle(v));
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<DeliveryRecord> records() const {
    std::vector<DeliveryRecord> out;
    for (const auto& ms : messages_) {
      for (const auto& [dst, ts] : ms.targets) {
        DeliveryRecord r;
        r.msg_id = ms.msg.id;
        r.src = ms.msg.src;
        r.dst = dst;
        r.sent_time = ts.sent;
        r.protocol = std::string(to_string(spec_.protocol));
        r.kind = ms.msg.kind;
        if (ts.recv) {
          r.recv_time = ts.recv;
          r.hop_count = ts.hops;
        } else {
          r.loss_cause = ts.cause;
        }
        out.push_back(std::move(r));
      }
    }
    return out;
  }

 private:
  struct TickEv {};
  struct BeaconEv {
    VehicleId vehicle{};
  };
  struct InjectEv {
    MessageId msg{};
  };
  enum class Leg : std::uint8_t { flood, direct, to_gateway, to_station, gateway_down, fog_down, beacon };
  struct RadioEv {
    MessageId msg{};
    std::optional<VehicleId> from;  // nullopt: a station transmitted
    std::optional<VehicleId> to;    // nullopt: a station receives
    StationId station{};
    std::uint64_t tx = 0;
    SimTime on_air_start;
    SimTime on_air_end;
    std::uint32_t hops = 0;
    Leg leg = Leg::flood;
    std::uint32_t request = 0;
    std::uint32_t attempt = 0;
  };
  struct FogTickEv {};
  enum class Stage : std::uint8_t { at_cloud, at_gateway, fog_ready, remote_fog };
  struct CloudEv {
    MessageId msg{};
    Stage stage = Stage::at_cloud;
    VehicleId gateway{};
    StationId station{};
    std::uint32_t request = 0;
  };
  struct EndEv {};
  using Payload = std::variant<TickEv, BeaconEv, InjectEv, RadioEv, FogTickEv, CloudEv, EndEv>;
  using Sched = Scheduler<Payload>;
  using Ev = Event<Payload>;

  struct TargetState {
    SimTime sent;
    std::optional<SimTime> recv;
    LossCause cause = LossCause::out_of_range;
    std::uint32_t hops = 0;
  };

  struct MessageState {
    Message msg;
    std::optional<StationId> station;
    std::map<VehicleId, TargetState> targets;
    std::unordered_set<std::uint32_t> holds;
    std::vector<std::vector<VehicleId>> requests;  // recipient sets travelling via the cloud
  };

  struct Transmitter {
    Position pos;
    std::optional<VehicleId> vehicle;
    StationId station{};
  };

  static constexpr int rank(LossCause c) {
    return c == LossCause::channel_loss ? 2 : c == LossCause::shadowed ? 1 : 0;
  }

  MessageState& message(MessageId id) {
    if (index(id) >= messages_.size()) throw LookupError("unknown message " + std::to_string(index(id)));
    return messages_[index(id)];
  }
  const MessageState& message(MessageId id) const {
    if (index(id) >= messages_.size()) throw LookupError("unknown message " + std::to_string(index(id)));
    return messages_[index(id)];
  }

  const std::vector<VehicleState>& snapshot(SimTime t) {
    if (!snapshot_time_ || *snapshot_time_ != t) {
      mobility_.snapshot_into(t, snapshot_);
      snapshot_time_ = t;
    }
    return snapshot_;
  }

  std::optional<StationId> station_of(Position p) const {
    return associate(p, spec_.stations, spec_.knobs.bs_coverage);
  }

  const BaseStation& bs(StationId id) const { return station(spec_.stations, id); }

  template <class... Parts>
  void log(const Ev& ev, const Parts&... parts) const {
    if (!log_.enabled()) return;
    std::ostringstream s;
    (s << ... << parts);
    log_.record(ev.fire_at, ev.seq, ev.kind, s.str());
  }

  void schedule_workload() {
    const double rate = spec_.workload.rate;
    if (!(rate > 0.0) || mobility_.size() == 0) return;
    for (std::uint64_t k = 0;; ++k) {
      const SimTime at = SimTime::from_seconds((static_cast<double>(k) + 0.5) / rate);
      if (at >= spec_.duration) break;
      const auto src = vehicle(static_cast<std::uint32_t>(workload_rng_.below(mobility_.size())));
      inject(src, at);
    }
  }

  void dispatch(const Ev& ev) {
    std::visit([&](const auto& p) { handle(ev, p); }, ev.payload);
  }

  // ---- bookkeeping -------------------------------------------------------

  void add_target(MessageState& ms, VehicleId v, SimTime sent) {
    TargetState ts;
    ts.sent = sent;
    ms.targets.try_emplace(v, ts);
  }

  void note_loss(MessageState& ms, VehicleId v, LossCause cause) {
    const auto it = ms.targets.find(v);
    if (it == ms.targets.end() || it->second.recv) return;
    if (rank(cause) > rank(it->second.cause)) it->second.cause = cause;
  }

  /// Returns {first time this vehicle holds the message, first delivery to a target}.
  std::pair<bool, bool> receive(MessageState& ms, VehicleId v, SimTime now, std::uint32_t hops) {
    const bool first = ms.holds.insert(index(v)).second;
    bool first_target = false;
    const auto it = ms.targets.find(v);
    if (it != ms.targets.end() && !it->second.recv) {
      it->second.recv = now;
      it->second.hops = hops;
      first_target = true;
    }
    return {first, first_target};
  }

  /// Time from `ready` until the frame goes on the air: a uniform backoff,
  /// stretched by busy medium when carrier sensing is on.
  SimTime channel_access(Position sender, SimTime ready, RngStream& rng) const {
    const SimTime backoff{rng.below(spec_.radio.max_backoff.us + 1)};
    if (!spec_.radio.carrier_sense) return backoff;
    return load_.access_time(sender, ready, backoff) - ready;
  }

  /// One frame from `tx` starting no earlier than `ready`, heard by `receivers`.
  /// Returns the time the frame leaves the air.
  SimTime send_frame(MessageState& ms, const Transmitter& tx, SimTime ready, std::span<const VehicleId> receivers,
                     std::uint32_t hops, Leg leg, std::optional<double> range = std::nullopt,
                     std::uint32_t request = 0, std::uint32_t attempt = 0) {
    const auto& snap = snapshot(ready);
    const SimTime backoff = channel_access(tx.pos, ready, backoff_rng_);
    const SimTime start = ready + backoff;
    const SimTime end = start + transmission_time(spec_.radio, ms.msg.size);
    const std::uint64_t tx_id = load_.add(tx.pos, start, end);
    for (const auto r : receivers) {
      if (tx.vehicle && *tx.vehicle == r) continue;
      const HopOutcome o = propagate(spec_.radio, obstacles_, tx.pos, snap[index(r)].pos, ms.msg.size, backoff, range);
      if (!o.delivered()) {
        note_loss(ms, r, o.loss_cause());
        if (leg == Leg::to_gateway) fail_request(ms, request, o.loss_cause());
        continue;
      }
      scheduler_.schedule(ready + o.delay(), EventKind::RadioDeliver,
                          RadioEv{ms.msg.id, tx.vehicle, r, tx.station, tx_id, start, end, hops, leg, request, attempt});
    }
    return end;
  }

  void send_to_station(MessageState& ms, VehicleId from, SimTime ready, StationId target, Leg leg,
                       std::uint32_t request = 0, std::uint32_t attempt = 0) {
    const Position pos = snapshot(ready)[index(from)].pos;
    const SimTime backoff = channel_access(pos, ready, backoff_rng_);
    const SimTime start = ready + backoff;
    const SimTime end = start + transmission_time(spec_.radio, ms.msg.size);
    const std::uint64_t tx_id = load_.add(pos, start, end);
    const HopOutcome o = propagate(spec_.radio, obstacles_, pos, bs(target).pos, ms.msg.size, backoff,
                                   spec_.knobs.bs_coverage);
    if (!o.delivered()) {
      uplink_failed(ms, leg, request, o.loss_cause());
      return;
    }
    scheduler_.schedule(ready + o.delay(), EventKind::RadioDeliver,
                        RadioEv{ms.msg.id, from, std::nullopt, target, tx_id, start, end, 1, leg, request, attempt});
  }

  void uplink_failed(MessageState& ms, Leg leg, std::uint32_t request, LossCause cause) {
    if (leg == Leg::to_station && spec_.protocol == Protocol::dfcv) {
      for (auto& [v, ts] : ms.targets) note_loss(ms, v, cause);
    } else {
      fail_request(ms, request, cause);
    }
  }

  void fail_request(MessageState& ms, std::uint32_t request, LossCause cause) {
    if (request >= ms.requests.size()) return;
    for (const auto v : ms.requests[request]) note_loss(ms, v, cause);
  }

  std::vector<VehicleId> all_vehicles() const {
    std::vector<VehicleId> out(mobility_.size());
    for (std::uint32_t i = 0; i < out.size(); ++i) out[i] = vehicle(i);
    return out;
  }

  Transmitter vehicle_tx(VehicleId v, SimTime t) { return Transmitter{snapshot(t)[index(v)].pos, v, StationId{}}; }

  // ---- event handlers ----------------------------------------------------

  void handle(const Ev& ev, const InjectEv& p) {
    MessageState& ms = message(p.msg);
    const auto& snap = snapshot(ev.fire_at);
    const VehicleId src = ms.msg.src;
    ms.station = station_of(snap[index(src)].pos);
    ms.holds.insert(index(src));

    std::vector<VehicleId> targets;
    if (const auto* list = std::get_if<std::vector<VehicleId>>(&ms.msg.targets)) {
      targets = *list;
      std::erase(targets, src);
    } else if (spec_.workload.target == TargetSelection::all) {
      targets = all_vehicles();
      std::erase(targets, src);
    } else {
      targets = scan_trans_range(snap, src, spec_.stations, spec_.knobs.bs_coverage);
    }
    for (const auto v : targets) add_target(ms, v, ev.fire_at);

    const std::string station_text = ms.station ? std::to_string(index(*ms.station)) : "-";
    switch (spec_.protocol) {
      case Protocol::baseline:
        log(ev, "msg=", index(ms.msg.id), " src=", index(src), " station=", station_text,
            " targets=", ms.targets.size());
        send_frame(ms, vehicle_tx(src, ev.fire_at), ev.fire_at + spec_.knobs.route_setup_delay, all_vehicles(), 1,
                   Leg::flood);
        break;
      case Protocol::hybrid_vehcloud:
        if (ms.targets.empty()) {
          log(ev, "msg=", index(ms.msg.id), " src=", index(src), " station=", station_text,
              " targets=0 no nearby vehicles in obstacle shadowing regions");
          break;
        }
        {
          const auto shadowed = classify_shadowed(ms, targets, ev.fire_at);
          log(ev, "msg=", index(ms.msg.id), " src=", index(src), " station=", station_text,
              " targets=", ms.targets.size(), " shadowed=", shadowed.size());
          send_frame(ms, vehicle_tx(src, ev.fire_at), ev.fire_at, all_vehicles(), 1, Leg::direct);
          if (!shadowed.empty()) start_cloud_path(ms, ev.fire_at, shadowed);
        }
        break;
      case Protocol::dfcv:
        log(ev, "msg=", index(ms.msg.id), " src=", index(src), " station=", station_text,
            " targets=", ms.targets.size());
        if (ms.targets.empty()) break;
        if (!ms.station) {
          for (auto& [v, ts] : ms.targets) note_loss(ms, v, LossCause::out_of_range);
          break;
        }
        maintain(*ms.station, ev.fire_at);
        send_to_station(ms, src, ev.fire_at, *ms.station, Leg::to_station);
        break;
    }
  }

  std::vector<VehicleId> classify_shadowed(const MessageState& ms, std::span<const VehicleId> vehicles, SimTime t) {
    const auto& snap = snapshot(t);
    std::vector<VehicleId> shadowed;
    for (const auto v : vehicles) {
      const auto own = station_of(snap[index(v)].pos);
      const auto& base = own ? bs(*own) : bs(ms.station.value_or(StationId{}));
      if (obstacle_shadowing(snap[index(v)], base, obstacles_).value == 1) shadowed.push_back(v);
    }
    return shadowed;
  }

  // Source -> entry gateway (or its station when no gateway is in reach) -> cloud.
  void start_cloud_path(MessageState& ms, SimTime t, std::vector<VehicleId> recipients) {
    const auto request = static_cast<std::uint32_t>(ms.requests.size());
    ms.requests.push_back(std::move(recipients));
    const auto& snap = snapshot(t);
    const VehicleState& src = snap[index(ms.msg.src)];
    const SimTime to_cloud = spec_.knobs.cloud.uplink_latency + spec_.knobs.cloud.processing_latency;
    if (src.is_gateway) {
      scheduler_.schedule(t + to_cloud, EventKind::CloudDeliver, CloudEv{ms.msg.id, Stage::at_cloud, src.id, {}, request});
      return;
    }
    std::optional<VehicleId> entry;
    double best = 0.0;
    for (const auto& v : snap) {
      if (!v.is_gateway || v.id == src.id) continue;
      if (!in_range(src.pos, v.pos, spec_.radio) || !line_of_sight(src.pos, v.pos, obstacles_)) continue;
      const double d = distance(src.pos, v.pos);
      if (!entry || d < best) {
        entry = v.id;
        best = d;
      }
    }
    if (entry) {
      const VehicleId e = *entry;
      send_frame(ms, vehicle_tx(src.id, t), t, std::span<const VehicleId>(&e, 1), 1, Leg::to_gateway, std::nullopt,
                 request);
      return;
    }
    if (ms.station) {
      send_to_station(ms, src.id, t, *ms.station, Leg::to_station, request);
      return;
    }
    fail_request(ms, request, LossCause::shadowed);
  }

  void handle(const Ev& ev, const RadioEv& p) {
    MessageState& ms = message(p.msg);
    const Position rx = p.to ? snapshot(ev.fire_at)[index(*p.to)].pos : bs(p.station).pos;
    const SimTime from = p.on_air_start - spec_.radio.load_window;
    const std::size_t conc = load_.concurrent(rx, from, p.on_air_end, p.tx);
    const std::string sender = p.from ? std::to_string(index(*p.from)) : "bs" + std::to_string(index(p.station));
    const std::string receiver = p.to ? std::to_string(index(*p.to)) : "bs" + std::to_string(index(p.station));
    if (channel_loss(spec_.radio, conc, loss_rng_)) {
      log(ev, "msg=", index(p.msg), " leg=", leg_name(p.leg), " from=", sender, " to=", receiver, " hops=", p.hops,
          " conc=", conc, " result=channel_loss attempt=", p.attempt);
      const bool unicast = p.leg == Leg::to_gateway || p.leg == Leg::to_station;
      if (unicast && p.attempt < spec_.radio.unicast_retries && p.from) {
        if (p.to) {
          const VehicleId one[] = {*p.to};
          send_frame(ms, vehicle_tx(*p.from, ev.fire_at), ev.fire_at, one, p.hops, p.leg, std::nullopt, p.request,
                     p.attempt + 1);
        } else {
          send_to_station(ms, *p.from, ev.fire_at, p.station, p.leg, p.request, p.attempt + 1);
        }
        return;
      }
      if (p.to) {
        note_loss(ms, *p.to, LossCause::channel_loss);
        if (p.leg == Leg::to_gateway) fail_request(ms, p.request, LossCause::channel_loss);
      } else {
        uplink_failed(ms, p.leg, p.request, LossCause::channel_loss);
      }
      return;
    }
    if (!p.to) {
      log(ev, "msg=", index(p.msg), " leg=", leg_name(p.leg), " from=", sender, " to=", receiver, " hops=", p.hops,
          " conc=", conc, " result=ok");
      if (spec_.protocol == Protocol::dfcv) {
        scheduler_.schedule(ev.fire_at + spec_.knobs.fog_processing, EventKind::CloudDeliver,
                            CloudEv{p.msg, Stage::fog_ready, {}, p.station, 0});
      } else {
        const SimTime to_cloud = spec_.knobs.cloud.uplink_latency + spec_.knobs.cloud.processing_latency;
        scheduler_.schedule(ev.fire_at + to_cloud, EventKind::CloudDeliver,
                            CloudEv{p.msg, Stage::at_cloud, {}, p.station, p.request});
      }
      return;
    }
    const auto [first, first_target] = receive(ms, *p.to, ev.fire_at, p.hops);
    log(ev, "msg=", index(p.msg), " leg=", leg_name(p.leg), " from=", sender, " to=", receiver, " hops=", p.hops,
        " conc=", conc, " result=ok first=", first ? 1 : 0, " first_target=", first_target ? 1 : 0);
    if (p.leg == Leg::flood && first && p.hops < ms.msg.ttl_hops) {
      send_frame(ms, vehicle_tx(*p.to, ev.fire_at), ev.fire_at, all_vehicles(), p.hops + 1, Leg::flood);
    } else if (p.leg == Leg::to_gateway) {
      const SimTime to_cloud = spec_.knobs.cloud.uplink_latency + spec_.knobs.cloud.processing_latency;
      scheduler_.schedule(ev.fire_at + to_cloud, EventKind::CloudDeliver,
                          CloudEv{p.msg, Stage::at_cloud, *p.to, {}, p.request});
    }
  }

  void handle(const Ev& ev, const CloudEv& p) {
    MessageState& ms = message(p.msg);
    switch (p.stage) {
      case Stage::at_cloud: return cloud_select(ev, ms, p);
      case Stage::at_gateway: {
        // The gateway's own copy came over one DSRC hop plus the cellular link.
        const auto [first, first_target] = receive(ms, p.gateway, ev.fire_at, 1);
        log(ev, "msg=", index(p.msg), " stage=at_gateway gateway=", index(p.gateway), " first=", first ? 1 : 0,
            " first_target=", first_target ? 1 : 0);
        send_frame(ms, vehicle_tx(p.gateway, ev.fire_at), ev.fire_at, all_vehicles(), 2, Leg::gateway_down);
        return;
      }
      case Stage::fog_ready: return fog_deliver(ev, ms, p.station, true);
      case Stage::remote_fog: return fog_deliver(ev, ms, p.station, false, p.request);
    }
  }

  void cloud_select(const Ev& ev, MessageState& ms, const CloudEv& p) {
    const auto& snap = snapshot(ev.fire_at);
    std::vector<VehicleState> pending;
    for (const auto v : ms.requests[p.request]) {
      if (!ms.holds.contains(index(v))) pending.push_back(snap[index(v)]);
    }
    std::vector<GatewayInfo> gateways;
    for (const auto& v : snap) {
      if (v.is_gateway) {
        gateways.push_back(GatewayInfo{v.id, v.pos, spec_.knobs.gateway_access_delay, spec_.knobs.gateway_bandwidth});
      }
    }
    const auto chosen = pending.empty() ? std::vector<VehicleId>{}
                                        : select_gateways(pending, gateways, spec_.knobs.k_max, spec_.radio, obstacles_);
    std::ostringstream ids;
    for (const auto g : chosen) ids << (ids.tellp() > 0 ? "," : "") << index(g);
    log(ev, "msg=", index(ms.msg.id), " stage=at_cloud pending=", pending.size(), " gateways=",
        chosen.empty() ? std::string("-") : ids.str());
    if (chosen.empty()) {
      // Cloud-direct: the station cannot see shadowed vehicles either.
      for (const auto& v : pending) note_loss(ms, v.id, LossCause::shadowed);
      return;
    }
    const SimTime down = spec_.knobs.cloud.downlink_latency + spec_.knobs.gateway_access_delay;
    for (const auto g : chosen) {
      scheduler_.schedule(ev.fire_at + down, EventKind::CloudDeliver, CloudEv{ms.msg.id, Stage::at_gateway, g, {}, 0});
    }
  }

  // Fog node at `station`: one group-addressed frame per fog cell that holds
  // pending recipients. At the origin station, recipients under another
  // station are forwarded through the cloud.
  void fog_deliver(const Ev& ev, MessageState& ms, StationId at, bool origin, std::uint32_t request = 0) {
    maintain(at, ev.fire_at);
    const auto& snap = snapshot(ev.fire_at);
    std::vector<VehicleId> pending;
    if (origin) {
      for (const auto& [v, ts] : ms.targets) {
        if (!ms.holds.contains(index(v))) pending.push_back(v);
      }
    } else {
      for (const auto v : ms.requests[request]) {
        if (!ms.holds.contains(index(v))) pending.push_back(v);
      }
    }
    std::map<std::uint64_t, std::size_t> cell_slot;  // cell id -> index in cells_[at]
    for (std::size_t i = 0; i < cells_[index(at)].size(); ++i) cell_slot[index(cells_[index(at)][i].id)] = i;
    std::map<std::size_t, bool> local_cells;
    std::map<std::uint32_t, std::vector<VehicleId>> remote;
    std::size_t unreachable = 0;
    for (const auto v : pending) {
      const auto& m = member_of_[index(v)];
      if (m && m->first == at) {
        local_cells[cell_slot.at(index(m->second))] = true;
        continue;
      }
      const auto other = station_of(snap[index(v)].pos);
      if (origin && other && *other != at) {
        remote[index(*other)].push_back(v);
      } else {
        note_loss(ms, v, LossCause::out_of_range);
        ++unreachable;
      }
    }
    log(ev, "msg=", index(ms.msg.id), " stage=", origin ? "fog_ready" : "remote_fog", " station=", index(at),
        " cells=", local_cells.size(), " remote_stations=", remote.size(), " unreachable=", unreachable);
    const Transmitter tx{bs(at).pos, std::nullopt, at};
    for (const auto& [slot, _] : local_cells) {
      const FogCell& cell = cells_[index(at)][slot];
      const SimTime ready = std::max(ev.fire_at, rsu_busy_[index(at)]);
      rsu_busy_[index(at)] = send_frame(ms, tx, ready, cell.members, 2, Leg::fog_down, spec_.knobs.bs_coverage);
    }
    const auto& cloud = spec_.knobs.cloud;
    const SimTime via_cloud = cloud.uplink_latency + cloud.processing_latency + cloud.downlink_latency;
    for (auto& [station_index, list] : remote) {
      const auto req = static_cast<std::uint32_t>(ms.requests.size());
      ms.requests.push_back(std::move(list));
      scheduler_.schedule(ev.fire_at + via_cloud, EventKind::CloudDeliver,
                          CloudEv{ms.msg.id, Stage::remote_fog, {}, StationId{station_index}, req});
    }
  }

  void handle(const Ev& ev, const BeaconEv& p) {
    const auto t = ev.fire_at;
    const VehicleState self = mobility_.position_at(p.vehicle, t);
    const SimTime backoff = channel_access(self.pos, t, beacon_rng_);
    const SimTime start = t + backoff;
    const SimTime end = start + transmission_time(spec_.radio, spec_.radio.msg_size);
    if (spec_.workload.include_beacons) {
      Message m;
      m.id = MessageId{messages_.size()};
      m.kind = MessageKind::beacon;
      m.src = p.vehicle;
      m.origin_time = t;
      m.size = spec_.radio.msg_size;
      m.ttl_hops = 1;
      messages_.emplace_back().msg = std::move(m);
      MessageState& ms = messages_.back();
      ms.holds.insert(index(p.vehicle));
      const auto& snap = snapshot(t);
      std::vector<VehicleId> neighbours;
      for (const auto& v : snap) {
        if (v.id != p.vehicle && in_range(self.pos, v.pos, spec_.radio)) neighbours.push_back(v.id);
      }
      for (const auto v : neighbours) add_target(ms, v, t);
      const std::uint64_t tx_id = load_.add(self.pos, start, end);
      for (const auto v : neighbours) {
        const HopOutcome o = propagate(spec_.radio, obstacles_, self.pos, snap[index(v)].pos, ms.msg.size, backoff);
        if (!o.delivered()) {
          note_loss(ms, v, o.loss_cause());
          continue;
        }
        scheduler_.schedule(t + o.delay(), EventKind::RadioDeliver,
                            RadioEv{ms.msg.id, p.vehicle, v, {}, tx_id, start, end, 1, Leg::beacon, 0});
      }
      log(ev, "vehicle=", index(p.vehicle), " msg=", index(ms.msg.id), " neighbours=", neighbours.size());
    } else {
      load_.add(self.pos, start, end);
      log(ev, "vehicle=", index(p.vehicle));
    }
    const SimTime next = t + spec_.workload.beacon_interval;
    if (next < spec_.duration) scheduler_.schedule(next, EventKind::BeaconEmit, BeaconEv{p.vehicle});
  }

  // Late joiners: vehicles that entered the origin station's coverage while
  // the message is still inside its dissemination window.
  void handle(const Ev& ev, const TickEv&) {
    const auto t = ev.fire_at;
    const auto& snap = snapshot(t);
    std::ostringstream joined;
    for (auto& ms : messages_) {
      if (ms.msg.kind == MessageKind::beacon || !ms.station) continue;
      if (ms.msg.origin_time >= t || t > ms.msg.origin_time + spec_.knobs.window) continue;
      if (!std::holds_alternative<AllInRegion>(ms.msg.targets) || spec_.workload.target != TargetSelection::bs_region) {
        continue;
      }
      const Position center = bs(*ms.station).pos;
      std::vector<VehicleId> newcomers;
      for (const auto& v : snap) {
        if (v.id == ms.msg.src || ms.targets.contains(v.id) || ms.holds.contains(index(v.id))) continue;
        if (distance(v.pos, center) <= spec_.knobs.bs_coverage) newcomers.push_back(v.id);
      }
      for (const auto v : newcomers) handle_new_vehicle(ms, v, t, joined);
    }
    log(ev, "newcomers=", joined.str().empty() ? std::string("-") : joined.str());
    const SimTime next = t + spec_.knobs.mobility_tick;
    if (next < spec_.duration) scheduler_.schedule(next, EventKind::MobilityTick, TickEv{});
  }

  void handle_new_vehicle(MessageState& ms, VehicleId v, SimTime t, std::ostringstream& joined) {
    add_target(ms, v, t);
    joined << (joined.tellp() > 0 ? "," : "") << index(ms.msg.id) << ':' << index(v);
    const VehicleId one[] = {v};
    if (classify_shadowed(ms, one, t).empty()) {
      send_frame(ms, vehicle_tx(ms.msg.src, t), t, one, 1, Leg::direct);
    } else {
      start_cloud_path(ms, t, {v});
    }
  }

  void handle(const Ev& ev, const FogTickEv&) {
    std::size_t cells = 0;
    for (const auto& st : spec_.stations) {
      maintain(st.id, ev.fire_at);
      cells += cells_[index(st.id)].size();
    }
    log(ev, "stations=", spec_.stations.size(), " cells=", cells);
    const SimTime next = ev.fire_at + spec_.knobs.fog_maintenance_interval;
    if (next < spec_.duration) scheduler_.schedule(next, EventKind::FogMaintenance, FogTickEv{});
  }

  void handle(const Ev& ev, const EndEv&) {
    std::size_t targets = 0;
    std::size_t delivered = 0;
    for (const auto& ms : messages_) {
      targets += ms.targets.size();
      for (const auto& [v, ts] : ms.targets) delivered += ts.recv ? 1 : 0;
    }
    log(ev, "messages=", messages_.size(), " targets=", targets, " delivered=", delivered);
    scheduler_.stop();
  }

  void maintain(StationId at, SimTime t) {
    const auto& snap = snapshot(t);
    std::vector<VehicleId> associated;
    for (const auto& v : snap) {
      const auto s = station_of(v.pos);
      if (s && *s == at) associated.push_back(v.id);
    }
    auto& cells = cells_[index(at)];
    const MaintainReport report = dfcv_maintain(cells, at, associated, snap, spec_.knobs.fog, cell_ids_);
    ++fog_stats_.maintain_calls;
    fog_stats_.max_passes = std::max(fog_stats_.max_passes, report.passes);
    if (const auto bad = check_partition(cells, at, associated)) {
      ++fog_stats_.violations;
      if (!fog_stats_.first_violation) fog_stats_.first_violation = *bad;
    }
    for (auto& m : member_of_) {
      if (m && m->first == at) m.reset();
    }
    for (const auto& c : cells) {
      for (const auto v : c.members) member_of_[index(v)] = std::make_pair(at, c.id);
    }
    if (fog_observer_) fog_observer_(t, at, cells, snap);
  }

  static const char* leg_name(Leg leg) {
    switch (leg) {
      case Leg::flood: return "flood";
      case Leg::direct: return "direct";
      case Leg::to_gateway: return "to_gateway";
      case Leg::to_station: return "to_station";
      case Leg::gateway_down: return "gateway_down";
      case Leg::fog_down: return "fog_down";
      case Leg::beacon: return "beacon";
    }
    return "?";
  }

  RunSpec spec_;
  const MobilityProvider& mobility_;
  const ObstacleMap& obstacles_;
  EventLog log_;
  Sched scheduler_;
  RngStream workload_rng_;
  RngStream loss_rng_;
  RngStream backoff_rng_;
  RngStream beacon_rng_;
  TransmissionLoad load_;
  std::vector<MessageState> messages_;
  std::vector<VehicleState> snapshot_;
  std::optional<SimTime> snapshot_time_;
  std::vector<std::vector<FogCell>> cells_;
  std::vector<std::optional<std::pair<StationId, CellId>>> member_of_;
  std::vector<SimTime> rsu_busy_;
  CellIdSource cell_ids_;
  FogStats fog_stats_;
  FogObserver fog_observer_;
  bool ran_ = false;
};

}  // namespace vanetsim
