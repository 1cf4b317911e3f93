#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <tuple>
#include <vector>

#include "vanetsim/errors.hpp"
#include "vanetsim/mobility/provider.hpp"
#include "vanetsim/protocols/simulation.hpp"
#include "vanetsim/sim/rng.hpp"
#include "vanetsim/sim/scheduler.hpp"
#include "vanetsim/sim/time.hpp"

using namespace vanetsim;

namespace {

using Sched = Scheduler<int>;

std::vector<std::pair<std::uint64_t, int>> drain(Sched& s, SimTime until, RunStats* stats = nullptr) {
  std::vector<std::pair<std::uint64_t, int>> seen;
  const RunStats r = s.run(until, [&](const Sched::EventType& e, Sched&) { seen.emplace_back(e.fire_at.us, e.payload); });
  if (stats) *stats = r;
  return seen;
}

}  // namespace

TEST(SimTime, SecondsRoundHalfUp) {
  EXPECT_EQ(SimTime::from_seconds(1.5).us, 1'500'000u);
  EXPECT_EQ(SimTime::from_seconds(0.0000005).us, 1u);
  EXPECT_EQ(SimTime::from_seconds(0.0000004).us, 0u);
  EXPECT_DOUBLE_EQ(SimTime{2'500'000}.seconds(), 2.5);
  EXPECT_THROW(SimTime::from_seconds(-1.0), ConfigError);
}

TEST(SimTime, SubtractionSaturatesAtZero) {
  EXPECT_EQ((SimTime{5} - SimTime{10}).us, 0u);
  EXPECT_EQ((SimTime{10} - SimTime{4}).us, 6u);
}

TEST(Scheduler, EventAtCurrentClockIsAcceptedAndFiresFirst) {
  Sched s;
  s.schedule(SimTime{5}, EventKind::MessageInject, 2);
  s.schedule(SimTime{0}, EventKind::MessageInject, 1);
  const auto seen = drain(s, SimTime{10});
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen[0].second, 1);
}

TEST(Scheduler, SimultaneousEventsKeepInsertionOrder) {
  Sched s;
  for (int i = 0; i < 20; ++i) s.schedule(SimTime{7}, EventKind::RadioDeliver, i);
  const auto seen = drain(s, SimTime{7});
  ASSERT_EQ(seen.size(), 20u);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(seen[i].second, i);
}

TEST(Scheduler, SchedulingIntoThePastIsRejected) {
  Sched s;
  s.schedule(SimTime{10}, EventKind::MobilityTick, 0);
  drain(s, SimTime{10});
  EXPECT_EQ(s.now().us, 10u);
  EXPECT_THROW(s.schedule(SimTime{5}, EventKind::MobilityTick, 0), ConfigError);
}

TEST(Scheduler, EmptyQueueRunIsANoOp) {
  Sched s;
  RunStats stats;
  drain(s, SimTime{1000}, &stats);
  EXPECT_EQ(stats.events, 0u);
  EXPECT_EQ(stats.clock.us, 0u);
}

TEST(Scheduler, RunStopsAtCutoff) {
  Sched s;
  for (int t = 1; t <= 3; ++t) s.schedule(SimTime{static_cast<std::uint64_t>(t)}, EventKind::BeaconEmit, t);
  RunStats stats;
  drain(s, SimTime{2}, &stats);
  EXPECT_EQ(stats.events, 2u);
  EXPECT_EQ(stats.clock.us, 2u);
  EXPECT_EQ(s.pending(), 1u);
}

TEST(Scheduler, BudgetOverflowIsADiagnosedError) {
  Sched s(100);
  s.schedule(SimTime{0}, EventKind::RadioDeliver, 0);
  EXPECT_THROW(s.run(SimTime{1'000'000},
                     [](const Sched::EventType& e, Sched& sch) {
                       sch.schedule(e.fire_at + SimTime{1}, EventKind::RadioDeliver, 0);
                     }),
               SimError);
}

TEST(Scheduler, StopEndsTheRun) {
  Sched s;
  for (int t = 1; t <= 5; ++t) s.schedule(SimTime{static_cast<std::uint64_t>(t)}, EventKind::MobilityTick, t);
  const RunStats r = s.run(SimTime{100}, [](const Sched::EventType& e, Sched& sch) {
    if (e.payload == 3) sch.stop();
  });
  EXPECT_EQ(r.events, 3u);
  EXPECT_EQ(r.clock.us, 3u);
}

TEST(Scheduler, ProcessingOrderMatchesSortOracle) {
  // Events scheduled up front and from inside handlers; the oracle sorts every
  // scheduled (fire_at, seq) pair and compares with the processing order.
  RngStream rng(42, "test");
  Sched s;
  std::vector<std::tuple<std::uint64_t, std::uint64_t>> scheduled;
  for (int i = 0; i < 300; ++i) {
    const SimTime at{rng.below(1000)};
    scheduled.emplace_back(at.us, s.schedule(at, EventKind::RadioDeliver, 1));
  }
  std::vector<std::tuple<std::uint64_t, std::uint64_t>> processed;
  s.run(SimTime{5000}, [&](const Sched::EventType& e, Sched& sch) {
    processed.emplace_back(e.fire_at.us, e.seq);
    if (e.payload == 1 && rng.draw() < 0.5) {
      const SimTime at = e.fire_at + SimTime{rng.below(50)};
      scheduled.emplace_back(at.us, sch.schedule(at, EventKind::RadioDeliver, 0));
    }
  });
  std::sort(scheduled.begin(), scheduled.end());
  EXPECT_EQ(processed, scheduled);
}

TEST(Rng, SameSeedAndStreamReplay) {
  RngStream a(7, "mobility");
  RngStream b(7, "mobility");
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.draw(), b.draw());
  EXPECT_EQ(a.draws(), 100u);
}

TEST(Rng, DifferentStreamsDiverge) {
  RngStream a(7, "mobility");
  RngStream b(7, "radio-loss");
  bool differ = false;
  for (int i = 0; i < 100 && !differ; ++i) differ = a.draw() != b.draw();
  EXPECT_TRUE(differ);
}

TEST(Rng, DifferentSeedsDiverge) {
  RngStream a(1, "workload");
  RngStream b(2, "workload");
  bool differ = false;
  for (int i = 0; i < 100 && !differ; ++i) differ = a.draw() != b.draw();
  EXPECT_TRUE(differ);
}

TEST(Rng, DrawsStayInUnitInterval) {
  RngStream r(123, "radio-loss");
  for (int i = 0; i < 100'000; ++i) {
    const double x = r.draw();
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
  }
  for (int i = 0; i < 10'000; ++i) ASSERT_LT(r.below(7), 7u);
}

TEST(Rng, UniformMeanIsCentered) {
  RngStream r(5, "mac-backoff");
  double sum = 0.0;
  const int n = 200'000;
  for (int i = 0; i < n; ++i) sum += r.draw();
  EXPECT_NEAR(sum / n, 0.5, 0.005);
}

TEST(EventLog, ReplayIsByteIdenticalAndOrdered) {
  const auto run_once = [] {
    MobilitySpec spec;
    spec.vehicle_count = 60;
    spec.road_length = 3000;
    RngStream mr(9, "mobility");
    const auto mobility = MobilityProvider::build(spec, mr);
    const ObstacleMap none;
    RunSpec rs;
    rs.protocol = Protocol::baseline;
    rs.seed = 9;
    rs.duration = SimTime::from_seconds(5);
    std::ostringstream text;
    Simulation sim(rs, mobility, none, EventLog(text));
    sim.run();
    return text.str();
  };
  const std::string first = run_once();
  const std::string second = run_once();
  EXPECT_EQ(first, second);
  ASSERT_FALSE(first.empty());

  std::istringstream in(first);
  std::string line;
  std::pair<std::uint64_t, std::uint64_t> last{0, 0};
  bool any = false;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    if (line.starts_with("#")) continue;
    std::istringstream fields(line);
    std::uint64_t t = 0, seq = 0;
    fields >> t >> seq;
    std::string kind;
    fields >> kind;
    EXPECT_FALSE(kind.empty());
    const std::pair<std::uint64_t, std::uint64_t> key{t, seq};
    if (any) {
      EXPECT_LE(last.first, key.first) << line;
      if (last.first == key.first) {
        EXPECT_LT(last.second, key.second) << line;
      }
    }
    last = key;
    any = true;
    ++lines;
  }
  EXPECT_GT(lines, 100u);
}
