#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vanetsim/geometry.hpp"
#include "vanetsim/sim/time.hpp"

namespace vanetsim {

/// Recently started transmissions, bucketed by location, answering
/// "how many other transmissions were on the air near this receiver".
class TransmissionLoad {
 public:
  struct Entry {
    std::uint64_t id = 0;
    Position sender;
    SimTime start;
    SimTime end;
  };

  /// `range` is the interference radius; `horizon` is how long entries are kept.
  TransmissionLoad(double range, SimTime horizon) : range_(range), horizon_(horizon) {}

  std::uint64_t add(Position sender, SimTime start, SimTime end) {
    const std::uint64_t id = ++last_id_;
    auto& bucket = buckets_[key_of(sender)];
    bucket.push_back(Entry{id, sender, start, end});
    latest_ = std::max(latest_, start);
    if (++adds_since_prune_ >= 4096) prune();
    return id;
  }

  /// Transmissions other than `exclude` whose airtime intersects [from, to]
  /// and whose sender is within range of `receiver`.
  std::size_t concurrent(Position receiver, SimTime from, SimTime to, std::uint64_t exclude) const {
    const auto [cx, cy] = cell_of(receiver);
    std::size_t count = 0;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = buckets_.find(pack(cx + dx, cy + dy));
        if (it == buckets_.end()) continue;
        for (const Entry& e : it->second) {
          if (e.id == exclude || e.end < from || e.start > to) continue;
          if (distance(e.sender, receiver) <= range_) ++count;
        }
      }
    }
    return count;
  }

  /// Start of a frame whose backoff countdown begins at `ready` near `pos`.
  /// The countdown only runs while no registered transmission in range is on
  /// the air, and the frame never starts inside one.
  SimTime access_time(Position pos, SimTime ready, SimTime backoff) const {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> busy;
    const auto [cx, cy] = cell_of(pos);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = buckets_.find(pack(cx + dx, cy + dy));
        if (it == buckets_.end()) continue;
        for (const Entry& e : it->second) {
          if (e.end > ready && distance(e.sender, pos) <= range_) busy.emplace_back(e.start.us, e.end.us);
        }
      }
    }
    std::sort(busy.begin(), busy.end());
    std::uint64_t t = ready.us;
    std::uint64_t remaining = backoff.us;
    for (const auto& [a, b] : busy) {
      if (a > t) {
        if (a - t >= remaining) break;
        remaining -= a - t;
      }
      t = std::max(t, b);
    }
    return SimTime{t + remaining};
  }

  void prune() {
    adds_since_prune_ = 0;
    const SimTime cutoff = latest_ - horizon_;
    for (auto it = buckets_.begin(); it != buckets_.end();) {
      auto& q = it->second;
      while (!q.empty() && q.front().end < cutoff) q.pop_front();
      it = q.empty() ? buckets_.erase(it) : std::next(it);
    }
  }

 private:
  std::pair<std::int64_t, std::int64_t> cell_of(Position p) const {
    return {static_cast<std::int64_t>(std::floor(p.x / range_)), static_cast<std::int64_t>(std::floor(p.y / range_))};
  }
  static std::uint64_t pack(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^ (static_cast<std::uint64_t>(cy) & 0xffffffffULL);
  }
  std::uint64_t key_of(Position p) const {
    const auto [cx, cy] = cell_of(p);
    return pack(cx, cy);
  }

  double range_;
  SimTime horizon_;
  SimTime latest_{};
  std::uint64_t last_id_ = 0;
  std::size_t adds_since_prune_ = 0;
  std::unordered_map<std::uint64_t, std::deque<Entry>> buckets_;
};

}  // namespace vanetsim
