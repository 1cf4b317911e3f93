#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "vanetsim/errors.hpp"
#include "vanetsim/protocols/types.hpp"
#include "vanetsim/radio/radio.hpp"

namespace vanetsim {

/// Outcome for one (message, intended recipient) pair.
struct DeliveryRecord {
  MessageId msg_id{};
  VehicleId src{};
  VehicleId dst{};
  SimTime sent_time;
  std::optional<SimTime> recv_time;
  std::optional<LossCause> loss_cause;
  std::string protocol;
  std::uint32_t hop_count = 0;
  MessageKind kind = MessageKind::event_driven;

  bool delivered() const { return recv_time.has_value(); }
};

struct MetricsSummary {
  std::string protocol;
  std::size_t vehicle_count = 0;
  std::uint64_t seed = 0;
  std::optional<double> mean_e2e_delay;        // seconds
  std::optional<double> delivery_probability;
  std::optional<double> plr;
  double avg_throughput = 0.0;                 // bit/s of delivered payload
  std::size_t n_sent = 0;
  std::size_t n_delivered = 0;
  std::size_t n_lost = 0;
};

namespace detail {

inline std::size_t count_delivered(std::span<const DeliveryRecord> records) {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(),
                                                [](const DeliveryRecord& r) { return r.delivered(); }));
}

}  // namespace detail

/// Mean of recv - sent over delivered records, in seconds; nullopt if none delivered.
inline std::optional<double> end_to_end_delay(std::span<const DeliveryRecord> records) {
  std::uint64_t total_us = 0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (!r.delivered()) continue;
    total_us += (*r.recv_time - r.sent_time).us;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return static_cast<double>(total_us) / static_cast<double>(n) * 1e-6;
}

inline std::optional<double> delivery_probability(std::span<const DeliveryRecord> records) {
  if (records.empty()) return std::nullopt;
  return static_cast<double>(detail::count_delivered(records)) / static_cast<double>(records.size());
}

inline std::optional<double> packet_loss_ratio(std::span<const DeliveryRecord> records) {
  if (records.empty()) return std::nullopt;
  return static_cast<double>(records.size() - detail::count_delivered(records)) / static_cast<double>(records.size());
}

/// Delivered payload bits per second over `window_s`.
inline double average_throughput(std::span<const DeliveryRecord> records, double window_s, std::uint32_t msg_size) {
  if (!(window_s > 0.0)) throw ConfigError("throughput window must be > 0");
  return static_cast<double>(detail::count_delivered(records)) * msg_size * 8.0 / window_s;
}

/// The four metrics for one run. Beacon records are left out unless asked for.
inline MetricsSummary summarize(std::span<const DeliveryRecord> all, std::string protocol, std::size_t vehicle_count,
                                std::uint64_t seed, double window_s, std::uint32_t msg_size,
                                bool include_beacons = false) {
  std::vector<DeliveryRecord> records;
  records.reserve(all.size());
  for (const auto& r : all) {
    if (include_beacons || r.kind != MessageKind::beacon) records.push_back(r);
  }
  MetricsSummary s;
  s.protocol = std::move(protocol);
  s.vehicle_count = vehicle_count;
  s.seed = seed;
  s.mean_e2e_delay = end_to_end_delay(records);
  s.delivery_probability = delivery_probability(records);
  s.plr = packet_loss_ratio(records);
  s.avg_throughput = average_throughput(records, window_s, msg_size);
  s.n_sent = records.size();
  s.n_delivered = detail::count_delivered(records);
  s.n_lost = s.n_sent - s.n_delivered;
  return s;
}

struct Stat {
  std::optional<double> mean;
  double stddev = 0.0;  // sample standard deviation (n-1); 0 for fewer than two values

  static Stat of(const std::vector<double>& values) {
    Stat s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (const double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    s.mean = mean;
    if (values.size() > 1) {
      double ss = 0.0;
      for (const double v : values) ss += (v - mean) * (v - mean);
      s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
  }
};

struct AggregateRow {
  std::string protocol;
  std::size_t vehicle_count = 0;
  std::size_t runs = 0;
  Stat mean_e2e_delay;
  Stat delivery_probability;
  Stat plr;
  Stat avg_throughput;
};

/// Seed-averaged metrics per (protocol, vehicle_count), sorted by protocol then count.
inline std::vector<AggregateRow> aggregate_sweep(std::span<const MetricsSummary> summaries) {
  struct Acc {
    std::size_t runs = 0;
    std::vector<double> delay, dp, plr, thr;
  };
  std::map<std::pair<std::string, std::size_t>, Acc> groups;
  for (const auto& s : summaries) {
    auto& g = groups[{s.protocol, s.vehicle_count}];
    ++g.runs;
    if (s.mean_e2e_delay) g.delay.push_back(*s.mean_e2e_delay);
    if (s.delivery_probability) g.dp.push_back(*s.delivery_probability);
    if (s.plr) g.plr.push_back(*s.plr);
    g.thr.push_back(s.avg_throughput);
  }
  std::vector<AggregateRow> rows;
  for (const auto& [key, g] : groups) {
    rows.push_back(AggregateRow{key.first, key.second, g.runs, Stat::of(g.delay), Stat::of(g.dp), Stat::of(g.plr),
                                Stat::of(g.thr)});
  }
  return rows;
}

inline constexpr const char* kMetricsCsvHeader =
    "protocol,vehicle_count,seed,mean_e2e_delay_s,delivery_probability,plr,avg_throughput_bps,n_sent,n_delivered,n_lost";

/// Nine significant digits; absent values become empty fields.
inline std::string format_real(std::optional<double> v) {
  if (!v) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", *v);
  return buf;
}

/// Sorts summaries into sweep order: protocol, vehicle_count, seed.
inline void sort_summaries(std::vector<MetricsSummary>& rows) {
  std::sort(rows.begin(), rows.end(), [](const MetricsSummary& a, const MetricsSummary& b) {
    return std::tie(a.protocol, a.vehicle_count, a.seed) < std::tie(b.protocol, b.vehicle_count, b.seed);
  });
}

inline void write_metrics_csv(std::ostream& out, std::vector<MetricsSummary> rows) {
  sort_summaries(rows);
  out << kMetricsCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.protocol << ',' << r.vehicle_count << ',' << r.seed << ',' << format_real(r.mean_e2e_delay) << ','
        << format_real(r.delivery_probability) << ',' << format_real(r.plr) << ',' << format_real(r.avg_throughput)
        << ',' << r.n_sent << ',' << r.n_delivered << ',' << r.n_lost << '\n';
  }
}

/// One `<protocol>_<metric>.dat` file per (protocol, metric) with
/// `vehicle_count value` rows of seed-averaged values.
inline std::vector<std::filesystem::path> write_plot_data(const std::filesystem::path& dir,
                                                          std::span<const AggregateRow> rows) {
  std::filesystem::create_directories(dir);
  struct Column {
    const char* name;
    Stat AggregateRow::*field;
  };
  const Column columns[] = {{"mean_e2e_delay_s", &AggregateRow::mean_e2e_delay},
                            {"delivery_probability", &AggregateRow::delivery_probability},
                            {"plr", &AggregateRow::plr},
                            {"avg_throughput_bps", &AggregateRow::avg_throughput}};
  std::map<std::string, std::vector<const AggregateRow*>> by_protocol;
  for (const auto& r : rows) by_protocol[r.protocol].push_back(&r);
  std::vector<std::filesystem::path> written;
  for (const auto& [protocol, list] : by_protocol) {
    for (const auto& col : columns) {
      const auto path = dir / (protocol + "_" + col.name + ".dat");
      std::ofstream out(path);
      if (!out) throw SimError("cannot write " + path.string());
      out << "# vehicle_count " << col.name << '\n';
      for (const auto* r : list) {
        const Stat& s = r->*col.field;
        if (s.mean) out << r->vehicle_count << ' ' << format_real(s.mean) << '\n';
      }
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace vanetsim
