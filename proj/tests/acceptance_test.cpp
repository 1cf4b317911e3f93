// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <streambuf>
#include <string>
#include <vector>

#include "vanetsim/vanetsim.hpp"

using namespace vanetsim;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(int n, bool ok, const std::string& what, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << n << ": " << what << " | " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

VehicleState placed(std::uint32_t i, Position p, bool gateway = false) {
  VehicleState v;
  v.id = vehicle(i);
  v.pos = p;
  v.is_gateway = gateway;
  return v;
}

RunSpec lossless(Protocol p, Position station) {
  RunSpec s;
  s.protocol = p;
  s.radio.base_loss = 0.0;
  s.radio.loss_slope = 0.0;
  s.radio.max_backoff = SimTime{0};
  s.radio.carrier_sense = false;
  s.workload.rate = 0.0;
  s.workload.beacon_interval = SimTime{0};
  s.duration = SimTime::from_seconds(5.0);
  s.stations = {BaseStation{StationId{0}, station}};
  return s;
}

// Seed-averaged metric per (protocol, density), straight from the per-run rows.
using Means = std::map<std::string, std::map<std::size_t, double>>;

Means means_of(const std::vector<MetricsSummary>& rows, std::optional<double> MetricsSummary::*field) {
  std::map<std::string, std::map<std::size_t, std::pair<double, int>>> acc;
  for (const auto& r : rows) {
    if (!(r.*field)) continue;
    auto& a = acc[r.protocol][r.vehicle_count];
    a.first += *(r.*field);
    a.second += 1;
  }
  Means out;
  for (const auto& [p, m] : acc) {
    for (const auto& [n, a] : m) out[p][n] = a.first / a.second;
  }
  return out;
}

Means throughput_means(const std::vector<MetricsSummary>& rows) {
  std::map<std::string, std::map<std::size_t, std::pair<double, int>>> acc;
  for (const auto& r : rows) {
    auto& a = acc[r.protocol][r.vehicle_count];
    a.first += r.avg_throughput;
    a.second += 1;
  }
  Means out;
  for (const auto& [p, m] : acc) {
    for (const auto& [n, a] : m) out[p][n] = a.first / a.second;
  }
  return out;
}

std::string series(const std::map<std::size_t, double>& m) {
  std::string s;
  for (const auto& [n, v] : m) s += (s.empty() ? "" : " ") + std::to_string(n) + ":" + fmt(v);
  return s;
}

// Largest relative drop between adjacent densities (0 when nondecreasing).
double worst_drop(const std::map<std::size_t, double>& m) {
  double worst = 0.0;
  const double* prev = nullptr;
  for (const auto& [n, v] : m) {
    if (prev != nullptr && *prev > 0.0) worst = std::max(worst, (*prev - v) / *prev);
    prev = &v;
  }
  return worst;
}

// Event-log recount: a single pass over the log lines of one run, counting
// intended recipients and first deliveries without touching the simulator's records.
class Recount : public std::streambuf {
 public:
  std::size_t sent = 0;
  std::size_t delivered = 0;
  std::uint64_t delay_us = 0;

 protected:
  int overflow(int c) override {
    if (c == traits_type::eof()) return traits_type::not_eof(c);
    if (c == '\n') {
      consume();
      line_.clear();
    } else {
      line_.push_back(static_cast<char>(c));
    }
    return c;
  }

  std::streamsize xsputn(const char* s, std::streamsize n) override {
    for (std::streamsize i = 0; i < n; ++i) overflow(static_cast<unsigned char>(s[i]));
    return n;
  }

 private:
  static std::string value(const std::string& text, const std::string& key) {
    std::size_t pos = 0;
    while ((pos = text.find(key + "=", pos)) != std::string::npos) {
      if (pos == 0 || text[pos - 1] == ' ') break;
      pos += key.size();
    }
    if (pos == std::string::npos) return {};
    const auto start = pos + key.size() + 1;
    return text.substr(start, text.find(' ', start) - start);
  }

  void consume() {
    if (line_.empty() || line_[0] == '#') return;
    const auto t1 = line_.find('\t');
    const auto t2 = line_.find('\t', t1 + 1);
    const auto t3 = line_.find('\t', t2 + 1);
    const std::uint64_t time = std::stoull(line_.substr(0, t1));
    const std::string kind = line_.substr(t2 + 1, t3 - t2 - 1);
    const std::string body = line_.substr(t3 + 1);
    if (kind == "MessageInject") {
      const auto msg = std::stoull(value(body, "msg"));
      inject_time_[msg] = time;
      sent += std::stoull(value(body, "targets"));
    } else if (kind == "MobilityTick") {
      const std::string list = value(body, "newcomers");
      if (list == "-") return;
      std::istringstream in(list);
      for (std::string item; std::getline(in, item, ',');) {
        const auto colon = item.find(':');
        late_[{std::stoull(item.substr(0, colon)), std::stoull(item.substr(colon + 1))}] = time;
        ++sent;
      }
    } else if ((kind == "RadioDeliver" || kind == "CloudDeliver") && value(body, "first_target") == "1") {
      const auto msg = std::stoull(value(body, "msg"));
      const auto dst = std::stoull(value(body, kind == "RadioDeliver" ? "to" : "gateway"));
      const auto it = late_.find({msg, dst});
      const std::uint64_t origin = it != late_.end() ? it->second : inject_time_.at(msg);
      delay_us += time - origin;
      ++delivered;
    }
  }

  std::string line_;
  std::map<std::uint64_t, std::uint64_t> inject_time_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> late_;
};

// ---- criteria -------------------------------------------------------------------

void determinism() {
  ScenarioConfig cfg;
  cfg.densities = {50, 150};
  cfg.seeds = {1, 2};
  cfg.sim_duration = SimTime::from_seconds(10.0);
  const auto dir = fs::temp_directory_path() / "vanetsim_acceptance";
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << to_json(cfg).dump(2);
  std::ostringstream out1, out2, err;
  const int c1 = cli_main({"run", "--config", (dir / "c.json").string(), "--out", (dir / "a.csv").string()}, out1, err);
  const int c2 = cli_main({"run", "--config", (dir / "c.json").string(), "--out", (dir / "b.csv").string()}, out2, err);
  const std::string a = slurp(dir / "a.csv");
  const std::string b = slurp(dir / "b.csv");
  std::ostringstream serial, parallel;
  write_metrics_csv(serial, run_sweep(cfg, nullptr, 1u).summaries);
  write_metrics_csv(parallel, run_sweep(cfg, nullptr, 4u).summaries);
  fs::remove_all(dir);
  const bool ok = c1 == 0 && c2 == 0 && !a.empty() && a == b && serial.str() == parallel.str() && serial.str() == a;
  verdict(1, ok, "determinism",
          "two CLI runs identical=" + std::to_string(a == b) + ", serial vs 4 workers identical=" +
              std::to_string(serial.str() == parallel.str()) + ", " + std::to_string(std::count(a.begin(), a.end(), '\n') - 1) +
              " rows");
}

void hop_delay_arithmetic() {
  const RadioParams p;
  const auto tx = transmission_time(p, 256);
  const auto hop = hop_delay(p, 256, 0.0, SimTime{0});
  verdict(2, tx.us == 1024 && hop.us == 1024, "hop-delay arithmetic",
          "256 B at 2 Mbit/s = " + std::to_string(tx.us) + " us, zero-distance hop = " + std::to_string(hop.us) + " us");
}

void flood_oracle() {
  RngStream rng(2024, "acceptance-flood");
  int mismatches = 0;
  std::size_t delivered = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + static_cast<std::uint32_t>(rng.below(50));
    std::vector<VehicleState> vs;
    for (std::uint32_t i = 0; i < n; ++i) vs.push_back(placed(i, {rng.uniform(0, 1500), rng.uniform(0, 1500)}));
    ObstacleMap map;
    const auto buildings = rng.below(5);
    for (std::uint64_t b = 0; b < buildings; ++b) {
      const double x = rng.uniform(0, 1300);
      const double y = rng.uniform(0, 1300);
      map.add(Rect{x, y, x + rng.uniform(20, 250), y + rng.uniform(20, 250)});
    }
    const auto mob = MobilityProvider::from_static(vs);
    auto spec = lossless(Protocol::baseline, {750, 750});
    spec.workload.target = TargetSelection::all;
    Simulation sim(spec, mob, map);
    const auto id = sim.inject(vehicle(0), SimTime::from_seconds(0.5), AllInRegion{}, std::max<std::uint32_t>(n, 1));
    sim.run();
    std::vector<bool> seen(n, false);
    std::queue<std::uint32_t> q;
    seen[0] = true;
    q.push(0);
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (std::uint32_t v = 0; v < n; ++v) {
        if (!seen[v] && distance(vs[u].pos, vs[v].pos) <= 300.0 && line_of_sight(vs[u].pos, vs[v].pos, map)) {
          seen[v] = true;
          q.push(v);
        }
      }
    }
    std::vector<VehicleId> component;
    for (std::uint32_t v = 0; v < n; ++v) {
      if (seen[v]) component.push_back(vehicle(v));
    }
    if (sim.holders(id) != component) ++mismatches;
    delivered += component.size() - 1;
  }
  verdict(3, mismatches == 0, "flood equals BFS component",
          "200 topologies, " + std::to_string(mismatches) + " mismatches, " + std::to_string(delivered) +
              " deliveries checked");
}

void fog_invariants() {
  ScenarioConfig cfg;
  const SweepJob job{Protocol::dfcv, 250, 1};
  const auto mobility = sweep_mobility(cfg, nullptr, job.vehicles, job.seed);
  const ObstacleMap none;
  Simulation sim(run_spec(cfg, job), mobility, none);
  const auto stations = sim.stations();
  const double coverage = cfg.knobs.bs_coverage;
  std::size_t checks = 0;
  std::size_t bad = 0;
  sim.set_fog_observer([&](SimTime, StationId at, std::span<const FogCell> cells, std::span<const VehicleState> snap) {
    ++checks;
    std::multiset<std::uint32_t> want;
    for (const auto& v : snap) {
      std::optional<std::size_t> best;
      for (std::size_t s = 0; s < stations.size(); ++s) {
        const double d = distance(v.pos, stations[s].pos);
        if (d <= coverage && (!best || d < distance(v.pos, stations[*best].pos))) best = s;
      }
      if (best && *best == index(at)) want.insert(index(v.id));
    }
    std::multiset<std::uint32_t> got;
    for (const auto& c : cells) {
      if (c.station != at || c.members.empty()) ++bad;
      for (const auto m : c.members) got.insert(index(m));
    }
    if (got != want) ++bad;
  });
  std::string error;
  FogStats fog;
  try {
    fog = sim.run().fog;
  } catch (const std::exception& e) {
    error = e.what();
  }
  const bool ok = error.empty() && bad == 0 && fog.violations == 0 && checks > 0;
  verdict(4, ok, "fog partition invariants",
          std::to_string(checks) + " maintenance calls, " + std::to_string(bad) + " partition violations, max passes " +
              std::to_string(fog.max_passes) + (error.empty() ? "" : ", error: " + error));
}

void gateway_greedy() {
  RngStream rng(5150, "acceptance-gateways");
  RadioParams radio;
  ObstacleMap map;
  map.add(Rect{250, 250, 450, 450});
  map.add(Rect{600, 100, 700, 600});
  int bad = 0;
  std::size_t greedy_sum = 0;
  std::size_t optimal_sum = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n_sh = 1 + static_cast<std::uint32_t>(rng.below(15));
    const auto n_gw = 1 + static_cast<std::uint32_t>(rng.below(10));
    const std::size_t k_max = 1 + rng.below(4);
    std::vector<VehicleState> sh;
    for (std::uint32_t i = 0; i < n_sh; ++i) sh.push_back(placed(i, {rng.uniform(0, 1000), rng.uniform(0, 1000)}));
    std::vector<GatewayInfo> gws;
    for (std::uint32_t g = 0; g < n_gw; ++g) {
      gws.push_back({vehicle(1000 + g), {rng.uniform(0, 1000), rng.uniform(0, 1000)}, SimTime{2'000}, 6e6});
    }
    std::vector<std::uint32_t> mask(n_gw, 0);
    for (std::uint32_t g = 0; g < n_gw; ++g) {
      for (std::uint32_t v = 0; v < n_sh; ++v) {
        if (distance(gws[g].pos, sh[v].pos) <= radio.range && line_of_sight(gws[g].pos, sh[v].pos, map)) {
          mask[g] |= 1u << v;
        }
      }
    }
    std::uint32_t got = 0;
    const auto chosen = select_gateways(sh, gws, k_max, radio, map);
    for (const auto id : chosen) got |= mask[index(id) - 1000];
    int best = 0;
    for (std::uint32_t subset = 0; subset < (1u << n_gw); ++subset) {
      if (static_cast<std::size_t>(std::popcount(subset)) > k_max) continue;
      std::uint32_t cov = 0;
      for (std::uint32_t g = 0; g < n_gw; ++g) {
        if (subset & (1u << g)) cov |= mask[g];
      }
      best = std::max(best, std::popcount(cov));
    }
    const int greedy = std::popcount(got);
    if (chosen.size() > k_max || greedy > best || greedy < (1.0 - 1.0 / std::exp(1.0)) * best - 1e-9) ++bad;
    greedy_sum += static_cast<std::size_t>(greedy);
    optimal_sum += static_cast<std::size_t>(best);
  }
  verdict(5, bad == 0, "greedy gateway coverage vs exhaustive",
          "100 instances, " + std::to_string(bad) + " out of bounds, covered greedy " + std::to_string(greedy_sum) +
              " vs optimal " + std::to_string(optimal_sum));
}

// The highway density sweep shared by criteria 6, 8, 9 and 11.
struct HighwaySweep {
  std::vector<MetricsSummary> rows;
  std::size_t runs = 0;
  std::size_t complement_bad = 0;
  std::size_t recount_bad = 0;
  std::string first_recount_problem;
};

HighwaySweep highway_sweep() {
  const ScenarioConfig cfg = load_config(std::string(VANETSIM_SCENARIOS) + "/highway.json");
  const ObstacleMap obstacles = build_obstacles(cfg);
  const double window = cfg.sim_duration.seconds();
  HighwaySweep out;
  for (const auto& job : sweep_jobs(cfg)) {
    const auto mobility = sweep_mobility(cfg, nullptr, job.vehicles, job.seed);
    Recount recount;
    std::ostream log_stream(&recount);
    Simulation sim(run_spec(cfg, job), mobility, obstacles, EventLog(log_stream));
    const auto result = sim.run();
    log_stream.flush();
    const auto s = summarize(result.records, std::string(to_string(job.protocol)), job.vehicles, job.seed, window,
                             cfg.radio.msg_size);
    ++out.runs;
    const auto dp = delivery_probability(result.records);
    const auto plr = packet_loss_ratio(result.records);
    if (dp && plr && std::abs(*dp + *plr - 1.0) > 1e-9) ++out.complement_bad;

    // Recomputed from the log counts alone.
    const std::optional<double> r_dp =
        recount.sent ? std::optional<double>(static_cast<double>(recount.delivered) / static_cast<double>(recount.sent))
                     : std::nullopt;
    const std::optional<double> r_plr =
        recount.sent ? std::optional<double>(static_cast<double>(recount.sent - recount.delivered) /
                                             static_cast<double>(recount.sent))
                     : std::nullopt;
    const std::optional<double> r_delay =
        recount.delivered ? std::optional<double>(static_cast<double>(recount.delay_us) /
                                                  static_cast<double>(recount.delivered) * 1e-6)
                          : std::nullopt;
    const double r_thr = static_cast<double>(recount.delivered) * cfg.radio.msg_size * 8.0 / window;
    const bool same = r_dp == s.delivery_probability && r_plr == s.plr && r_delay == s.mean_e2e_delay &&
                      r_thr == s.avg_throughput && recount.sent == s.n_sent;
    if (!same) {
      ++out.recount_bad;
      if (out.first_recount_problem.empty()) {
        out.first_recount_problem = std::string(to_string(job.protocol)) + "/" + std::to_string(job.vehicles) + "/" +
                                    std::to_string(job.seed) + " log sent=" + std::to_string(recount.sent) +
                                    " delivered=" + std::to_string(recount.delivered) + " vs records sent=" +
                                    std::to_string(s.n_sent) + " delivered=" + std::to_string(s.n_delivered);
      }
    }
    out.rows.push_back(s);
  }
  return out;
}

void delay_trend(const HighwaySweep& sw) {
  const auto delay = means_of(sw.rows, &MetricsSummary::mean_e2e_delay);
  bool ok = true;
  std::string detail;
  for (const auto& [p, m] : delay) {
    const double drop = worst_drop(m);
    ok &= drop <= 0.05;
    detail += p + " [" + series(m) + "] worst drop " + fmt(100.0 * drop) + "%; ";
  }
  verdict(6, ok, "delay nondecreasing in density (5% tolerance)", detail);
}

void grid_shadowing() {
  const ScenarioConfig cfg = load_config(std::string(VANETSIM_SCENARIOS) + "/grid_obstacles.json");
  const ObstacleMap map = build_obstacles(cfg);
  const Rect area{0, 0, cfg.mobility.road_length, cfg.mobility.road_length};
  const double covered = map.covered_area(area) / area.area();
  const auto result = run_sweep(cfg);
  const auto dp = means_of(result.summaries, &MetricsSummary::delivery_probability);
  bool ok = covered >= 0.30 && dp.count("hybrid_vehcloud") && dp.count("baseline");
  std::string detail = "obstacles cover " + fmt(100.0 * covered) + "% of area; ";
  if (ok) {
    for (const auto& [n, h] : dp.at("hybrid_vehcloud")) ok &= h > dp.at("baseline").at(n);
    detail += "hybrid [" + series(dp.at("hybrid_vehcloud")) + "] baseline [" + series(dp.at("baseline")) + "]";
  }
  verdict(7, ok, "hybrid beats flood delivery in shadowed grid", detail);
}

void plr_trend(const HighwaySweep& sw) {
  const auto plr = means_of(sw.rows, &MetricsSummary::plr);
  bool ok = true;
  std::string detail;
  for (const auto& [p, m] : plr) {
    const double drop = worst_drop(m);
    ok &= drop <= 0.05;
    detail += p + " [" + series(m) + "] worst drop " + fmt(100.0 * drop) + "%; ";
  }
  const double dfcv = plr.at("dfcv").at(450);
  const double base = plr.at("baseline").at(450);
  ok &= dfcv <= base;
  detail += "at 450: dfcv " + fmt(dfcv) + " vs baseline " + fmt(base);
  verdict(8, ok, "PLR nondecreasing in density and DFCV <= baseline at 450", detail);
}

void throughput_trend(const HighwaySweep& sw) {
  const auto thr = throughput_means(sw.rows);
  bool ok = true;
  std::string detail;
  for (const auto* p : {"dfcv", "hybrid_vehcloud"}) {
    const auto& m = thr.at(p);
    double prev = -1.0;
    for (const auto& [n, v] : m) {
      ok &= v >= prev;
      prev = v;
    }
    detail += std::string(p) + " [" + series(m) + "]; ";
  }
  verdict(9, ok, "throughput nondecreasing in density", detail);
}

void hybrid_equivalence() {
  RngStream rng(77, "acceptance-hybrid");
  const ObstacleMap none;
  int mismatches = 0;
  std::size_t delivered = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = 2 + static_cast<std::uint32_t>(rng.below(49));
    std::vector<VehicleState> vs;
    for (std::uint32_t i = 0; i < n; ++i) {
      vs.push_back(placed(i, {rng.uniform(-700, 700), rng.uniform(-700, 700)}, rng.draw() < 0.1));
    }
    const auto mob = MobilityProvider::from_static(vs);
    Simulation sim(lossless(Protocol::hybrid_vehcloud, {0, 0}), mob, none);
    const auto id = sim.inject(vehicle(0), SimTime::from_seconds(0.5));
    sim.run();
    std::vector<VehicleId> one_hop{vehicle(0)};
    for (std::uint32_t v = 1; v < n; ++v) {
      if (distance(vs[0].pos, vs[v].pos) <= 300.0) one_hop.push_back(vehicle(v));
    }
    if (sim.holders(id) != one_hop) ++mismatches;
    delivered += one_hop.size() - 1;
  }
  verdict(10, mismatches == 0, "hybrid without obstacles equals one-hop broadcast",
          "50 topologies, " + std::to_string(mismatches) + " mismatches, " + std::to_string(delivered) +
              " deliveries checked");
}

void metrics_recount(const HighwaySweep& sw) {
  const bool ok = sw.complement_bad == 0 && sw.recount_bad == 0 && sw.runs > 0;
  verdict(11, ok, "metrics complementarity and event-log recount",
          std::to_string(sw.runs) + " runs, " + std::to_string(sw.complement_bad) + " complementarity failures, " +
              std::to_string(sw.recount_bad) + " recount mismatches" +
              (sw.first_recount_problem.empty() ? "" : " (first: " + sw.first_recount_problem + ")"));
}

void fcd_ingestion() {
  const std::string path = std::string(VANETSIM_TEST_DATA) + "/two_vehicles.fcd.xml";
  RngStream rng(1, "mobility");
  const auto mob = MobilityProvider::from_trace(parse_fcd(path), 0.0, rng);
  struct Probe {
    std::uint32_t v;
    double t;
    Position want;
  };
  // car0: (0,0) @0, (10,0) @1, (50,0) @3.  bus1: (100,50) @0, (100,70) @1, (100,110) @3.
  const Probe probes[] = {{0, 0.0, {0, 0}},   {0, 1.0, {10, 0}},  {0, 3.0, {50, 0}},    {0, 0.5, {5, 0}},
                          {0, 2.0, {30, 0}},  {1, 0.0, {100, 50}}, {1, 1.0, {100, 70}}, {1, 3.0, {100, 110}},
                          {1, 0.5, {100, 60}}, {1, 2.0, {100, 90}}};
  int wrong = 0;
  for (const auto& p : probes) {
    const auto s = mob.position_at(vehicle(p.v), SimTime::from_seconds(p.t));
    if (std::abs(s.pos.x - p.want.x) > 1e-9 || std::abs(s.pos.y - p.want.y) > 1e-9) ++wrong;
  }

  ScenarioConfig cfg;
  cfg.mobility.mode = MobilityMode::trace;
  cfg.mobility.trace_path = path;
  cfg.densities = {2};
  cfg.seeds = {1};
  cfg.sim_duration = SimTime::from_seconds(3.0);
  std::ostringstream csv;
  std::string error;
  std::size_t rows = 0;
  try {
    const auto r = run_sweep(cfg);
    write_metrics_csv(csv, r.summaries);
    rows = r.summaries.size();
    for (const auto& s : r.summaries) {
      if (s.n_sent != s.n_delivered + s.n_lost) error = "inconsistent counts for " + s.protocol;
    }
  } catch (const std::exception& e) {
    error = e.what();
  }
  const bool header = csv.str().rfind(std::string(kMetricsCsvHeader) + "\n", 0) == 0;
  const bool ok = wrong == 0 && error.empty() && rows == cfg.protocols.size() && header;
  verdict(12, ok, "FCD trace ingestion",
          std::to_string(std::size(probes) - static_cast<std::size_t>(wrong)) + "/" + std::to_string(std::size(probes)) +
              " exact positions, trace-driven sweep produced " + std::to_string(rows) + " CSV rows" +
              (error.empty() ? "" : ", error: " + error));
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  try {
    determinism();
    hop_delay_arithmetic();
    flood_oracle();
    fog_invariants();
    gateway_greedy();
    const HighwaySweep sweep = highway_sweep();
    delay_trend(sweep);
    grid_shadowing();
    plr_trend(sweep);
    throughput_trend(sweep);
    hybrid_equivalence();
    metrics_recount(sweep);
    fcd_ingestion();
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
    return 2;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << " in "
            << fmt(secs) << " s" << std::endl;
  return failures == 0 ? 0 : 1;
}
