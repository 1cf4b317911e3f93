#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>

#include "vanetsim/errors.hpp"

namespace vanetsim {

/// Simulation time: whole microseconds since the start of the run.
struct SimTime {
  std::uint64_t us = 0;

  constexpr auto operator<=>(const SimTime&) const = default;

  static constexpr SimTime from_us(std::uint64_t micros) { return SimTime{micros}; }

  /// Rounds half-up to the nearest microsecond.
  static SimTime from_seconds(double seconds) {
    if (!std::isfinite(seconds) || seconds < 0.0) {
      throw ConfigError("time must be a finite nonnegative number of seconds");
    }
    const double micros = std::floor(seconds * 1e6 + 0.5);
    if (micros >= static_cast<double>(std::numeric_limits<std::uint64_t>::max())) {
      throw ConfigError("time out of range");
    }
    return SimTime{static_cast<std::uint64_t>(micros)};
  }

  constexpr double seconds() const { return static_cast<double>(us) * 1e-6; }
};

constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime{a.us + b.us}; }

constexpr SimTime& operator+=(SimTime& a, SimTime b) {
  a.us += b.us;
  return a;
}

/// Saturates at zero.
constexpr SimTime operator-(SimTime a, SimTime b) { return SimTime{a.us > b.us ? a.us - b.us : 0}; }

}  // namespace vanetsim
