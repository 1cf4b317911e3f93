#pragma once

#include <algorithm>
#include <cmath>

namespace vanetsim {

/// Planar Cartesian position in meters.
struct Position {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Position&) const = default;
};

inline double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Axis-aligned rectangle; used for building footprints and scenario bounds.
struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  bool operator==(const Rect&) const = default;

  double area() const { return (x_max - x_min) * (y_max - y_min); }

  bool contains(Position p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }

  /// Open interior; points on an edge are outside.
  bool interior_contains(Position p) const {
    return p.x > x_min && p.x < x_max && p.y > y_min && p.y < y_max;
  }
};

/// True iff the segment a-b passes through the open interior of r.
/// A segment that only touches an edge or a corner is not blocked.
inline bool segment_crosses_interior(Position a, Position b, const Rect& r) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  if (dx == 0.0 && dy == 0.0) return r.interior_contains(a);

  // Liang-Barsky clip against the closed rectangle.
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - r.x_min, r.x_max - a.x, a.y - r.y_min, r.y_max - a.y};
  double t0 = 0.0;
  double t1 = 1.0;
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return false;
  }
  if (t1 <= t0) return false;

  // The clipped chord lies inside the closed rectangle; by convexity it
  // meets the open interior iff its midpoint does.
  const double tm = 0.5 * (t0 + t1);
  return r.interior_contains(Position{a.x + tm * dx, a.y + tm * dy});
}

}  // namespace vanetsim
