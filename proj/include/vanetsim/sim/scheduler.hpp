#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vanetsim/errors.hpp"
#include "vanetsim/sim/time.hpp"

namespace vanetsim {

enum class EventKind : std::uint8_t {
  MobilityTick,
  BeaconEmit,
  MessageInject,
  RadioDeliver,
  FogMaintenance,
  CloudDeliver,
  SimEnd,
};

constexpr std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::MobilityTick: return "MobilityTick";
    case EventKind::BeaconEmit: return "BeaconEmit";
    case EventKind::MessageInject: return "MessageInject";
    case EventKind::RadioDeliver: return "RadioDeliver";
    case EventKind::FogMaintenance: return "FogMaintenance";
    case EventKind::CloudDeliver: return "CloudDeliver";
    case EventKind::SimEnd: return "SimEnd";
  }
  return "?";
}

template <class Payload>
struct Event {
  SimTime fire_at;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::SimEnd;
  Payload payload{};
};

struct RunStats {
  std::uint64_t events = 0;
  SimTime clock;

  bool operator==(const RunStats&) const = default;
};

inline constexpr std::uint64_t kDefaultEventBudget = 50'000'000;

/// Deterministic event queue and run loop.
///
/// Events dequeue in (fire_at, seq) order, where seq is the insertion
/// counter, so simultaneous events fire in the order they were scheduled.
/// The handler is called as `handler(const Event<Payload>&, Scheduler&)` and
/// may schedule further events or call stop().
template <class Payload>
class Scheduler {
 public:
  using EventType = Event<Payload>;

  explicit Scheduler(std::uint64_t event_budget = kDefaultEventBudget) : budget_(event_budget) {}

  SimTime now() const { return clock_; }
  std::size_t pending() const { return heap_.size(); }
  std::uint64_t processed() const { return processed_; }

  /// Returns the sequence number given to the event.
  std::uint64_t schedule(SimTime fire_at, EventKind kind, Payload payload = {}) {
    if (fire_at < clock_) {
      throw ConfigError("cannot schedule " + std::string(to_string(kind)) + " at t=" +
                        std::to_string(fire_at.us) + "us: clock is already at " +
                        std::to_string(clock_.us) + "us");
    }
    const std::uint64_t seq = next_seq_++;
    heap_.push_back(EventType{fire_at, seq, kind, std::move(payload)});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
    return seq;
  }

  void stop() { stopped_ = true; }

  /// Processes every event with fire_at <= until, or until stop() is called.
  template <class Handler>
  RunStats run(SimTime until, Handler&& handler) {
    stopped_ = false;
    std::uint64_t count = 0;
    while (!heap_.empty() && !stopped_ && heap_.front().fire_at <= until) {
      std::pop_heap(heap_.begin(), heap_.end(), Later{});
      EventType event = std::move(heap_.back());
      heap_.pop_back();
      if (++processed_ > budget_) {
        throw SimError("event budget of " + std::to_string(budget_) +
                       " exceeded at t=" + std::to_string(event.fire_at.us) +
                       "us; likely an unbounded broadcast cascade");
      }
      clock_ = event.fire_at;
      ++count;
      handler(static_cast<const EventType&>(event), *this);
    }
    return RunStats{count, clock_};
  }

 private:
  struct Later {
    bool operator()(const EventType& a, const EventType& b) const {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.seq > b.seq;
    }
  };

  std::vector<EventType> heap_;
  SimTime clock_{};
  std::uint64_t next_seq_ = 0;
  std::uint64_t processed_ = 0;
  std::uint64_t budget_;
  bool stopped_ = false;
};

/// Tab-separated event log: `time_us  seq  kind  summary`, one line per event.
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(std::ostream& out) : out_(&out) {}

  bool enabled() const { return out_ != nullptr; }

  void record(SimTime at, std::uint64_t seq, EventKind kind, std::string_view summary) const {
    if (out_ == nullptr) return;
    *out_ << at.us << '\t' << seq << '\t' << to_string(kind) << '\t' << summary << '\n';
  }

  void comment(std::string_view text) const {
    if (out_ != nullptr) *out_ << "# " << text << '\n';
  }

 private:
  std::ostream* out_ = nullptr;
};

}  // namespace vanetsim
