#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace vanetsim {

namespace detail {

constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// A named, independently seeded random stream.
///
/// One stream per stochastic subsystem ("mobility", "radio-loss",
/// "mac-backoff", ...). Draws in one stream do not shift another. Real values
/// are mapped from mt19937_64 output by hand, giving identical sequences for a
/// given (seed, stream_id) on every platform.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view stream_id)
      : seed_(seed),
        id_(stream_id),
        engine_(detail::splitmix64(seed ^ detail::splitmix64(detail::fnv1a64(stream_id)))) {}

  /// Uniform real in [0, 1) with 53 bits of resolution.
  double draw() {
    ++draws_;
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform real in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * draw(); }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const auto k = static_cast<std::uint64_t>(draw() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  std::uint64_t seed() const { return seed_; }
  const std::string& id() const { return id_; }
  std::uint64_t draws() const { return draws_; }

 private:
  std::uint64_t seed_;
  std::string id_;
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

}  // namespace vanetsim
