#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vanetsim/errors.hpp"
#include "vanetsim/metrics/metrics.hpp"
#include "vanetsim/mobility/fcd.hpp"
#include "vanetsim/mobility/provider.hpp"
#include "vanetsim/protocols/simulation.hpp"
#include "vanetsim/scenario/config.hpp"

namespace vanetsim {

struct SweepJob {
  Protocol protocol = Protocol::baseline;
  std::uint32_t vehicles = 0;
  std::uint64_t seed = 0;
};

struct SweepResult {
  std::vector<MetricsSummary> summaries;  // sorted by (protocol, vehicle_count, seed)
  std::vector<AggregateRow> aggregates;
  std::vector<FogStats> fog;              // parallel to summaries
};

/// Jobs in output order: protocol, then density, then seed.
inline std::vector<SweepJob> sweep_jobs(const ScenarioConfig& cfg) {
  std::vector<SweepJob> jobs;
  for (const auto p : cfg.protocols) {
    for (const auto n : cfg.densities) {
      for (const auto s : cfg.seeds) jobs.push_back(SweepJob{p, n, s});
    }
  }
  std::stable_sort(jobs.begin(), jobs.end(), [](const SweepJob& a, const SweepJob& b) {
    const auto ka = std::make_tuple(std::string(to_string(a.protocol)), a.vehicles, a.seed);
    const auto kb = std::make_tuple(std::string(to_string(b.protocol)), b.vehicles, b.seed);
    return ka < kb;
  });
  return jobs;
}

inline RunSpec run_spec(const ScenarioConfig& cfg, const SweepJob& job) {
  RunSpec spec;
  spec.protocol = job.protocol;
  spec.radio = cfg.radio;
  spec.knobs = cfg.knobs;
  spec.workload = cfg.workload;
  spec.duration = cfg.sim_duration;
  spec.drain = cfg.drain;
  spec.seed = job.seed;
  spec.stations = cfg.base_stations;
  return spec;
}

/// Mobility for one (density, seed): identical for every protocol.
inline MobilityProvider sweep_mobility(const ScenarioConfig& cfg, const std::vector<TraceSample>* trace,
                                       std::uint32_t vehicles, std::uint64_t seed) {
  RngStream rng(seed, "mobility");
  if (cfg.mobility.mode == MobilityMode::trace) {
    auto provider = MobilityProvider::from_trace(*trace, cfg.mobility.gateway_fraction, rng);
    if (provider.size() != vehicles) {
      throw ConfigError("densities: trace " + cfg.mobility.trace_path.value_or("") + " holds " +
                        std::to_string(provider.size()) + " vehicles but the sweep asks for " +
                        std::to_string(vehicles));
    }
    return provider;
  }
  MobilitySpec spec = cfg.mobility;
  spec.vehicle_count = vehicles;
  return MobilityProvider::build(spec, rng);
}

/// Runs every (protocol, density, seed) combination on `jobs` worker threads
/// (default: cfg.jobs). Output order never depends on the thread count.
inline SweepResult run_sweep(const ScenarioConfig& cfg, std::ostream* event_log = nullptr,
                             std::optional<unsigned> jobs = std::nullopt) {
  validate(cfg);
  const ObstacleMap obstacles = build_obstacles(cfg);
  std::vector<TraceSample> trace;
  if (cfg.mobility.mode == MobilityMode::trace) trace = parse_fcd(*cfg.mobility.trace_path);

  const std::vector<SweepJob> work = sweep_jobs(cfg);
  std::vector<MetricsSummary> summaries(work.size());
  std::vector<FogStats> fog(work.size());
  std::vector<std::string> logs(work.size());
  std::vector<std::exception_ptr> errors(work.size());
  const double window_s = cfg.sim_duration.seconds();

  const auto run_one = [&](std::size_t i) {
    const SweepJob& job = work[i];
    try {
      const MobilityProvider mobility = sweep_mobility(cfg, &trace, job.vehicles, job.seed);
      std::ostringstream log_text;
      EventLog log = event_log ? EventLog(log_text) : EventLog();
      log.comment("run protocol=" + std::string(to_string(job.protocol)) + " vehicles=" +
                  std::to_string(job.vehicles) + " seed=" + std::to_string(job.seed));
      Simulation sim(run_spec(cfg, job), mobility, obstacles, log);
      const RunResult result = sim.run();
      summaries[i] = summarize(result.records, std::string(to_string(job.protocol)), job.vehicles, job.seed,
                               window_s, cfg.radio.msg_size, cfg.workload.include_beacons);
      fog[i] = result.fog;
      logs[i] = log_text.str();
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(jobs.value_or(cfg.jobs), work.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < work.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < work.size(); i = next++) run_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (std::size_t i = 0; i < work.size(); ++i) {
    if (!errors[i]) continue;
    const SweepJob& job = work[i];
    const std::string where = "run protocol=" + std::string(to_string(job.protocol)) +
                              " density=" + std::to_string(job.vehicles) + " seed=" + std::to_string(job.seed);
    try {
      std::rethrow_exception(errors[i]);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    } catch (const std::exception& e) {
      throw SimError(where + ": " + e.what());
    }
  }

  if (event_log) {
    for (const auto& text : logs) *event_log << text;
  }
  SweepResult out;
  out.summaries = std::move(summaries);
  out.fog = std::move(fog);
  out.aggregates = aggregate_sweep(out.summaries);
  return out;
}

}  // namespace vanetsim
