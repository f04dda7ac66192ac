#pragma once

#include <cmath>
#include <optional>
#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace advscen {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  bool operator==(const Vec2&) const = default;
};

inline Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
inline Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
inline Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
inline Vec2 operator*(Vec2 a, double s) { return a *= s; }
inline Vec2 operator*(double s, Vec2 a) { return a *= s; }
inline Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
/// z-component of the 3D cross product of (a, 0) and (b, 0).
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }
inline Vec2 unit_from_angle(double heading) { return {std::cos(heading), std::sin(heading)}; }
inline Vec2 left_normal(const Vec2& t) { return {-t.y, t.x}; }
inline bool is_finite(const Vec2& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

struct Pose {
  Vec2 position;
  double heading = 0.0;
  bool operator==(const Pose&) const = default;
};

/// Arc-length parameterized polyline. Queries beyond either end extrapolate
/// along the first/last segment.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> points);

  const std::vector<Vec2>& points() const { return points_; }
  bool empty() const { return points_.empty(); }
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  Vec2 point_at(double s) const;
  Vec2 tangent_at(double s) const;
  /// Unsigned curvature estimate at arc length s (0 on straight pieces).
  double curvature_at(double s) const;

  struct Projection {
    double s = 0.0;        // arc length of the foot point (may be <0 or >length)
    double lateral = 0.0;  // signed offset, positive to the left of travel
    Vec2 foot;
    Vec2 tangent;
  };
  /// Closest point with the end segments extended as rays.
  Projection project(const Vec2& p) const;
  /// Same, searching only segments that overlap arc lengths [s_lo, s_hi].
  /// Falls back to the full search when the best foot lies on the edge of
  /// that range (the true foot may be outside it).
  Projection project(const Vec2& p, double s_lo, double s_hi) const;

  /// Polyline shifted laterally by `offset` (left positive).
  Polyline offset(double offset) const;
  Polyline reversed() const;

  bool operator==(const Polyline& o) const { return points_ == o.points_; }

 private:
  Projection project_range(const Vec2& p, std::size_t first, std::size_t stop) const;
  std::size_t segment_index(double s) const;

  std::vector<Vec2> points_;
  std::vector<double> cumulative_;
};

/// Samples a circular arc (counter-clockwise for positive sweep).
std::vector<Vec2> arc_points(const Vec2& center, double radius, double start_angle,
                             double sweep, double spacing = 1.0);

struct OrientedRect {
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;  // along heading
  double width = 0.0;

  std::array<Vec2, 4> corners() const;
  bool contains(const Vec2& p) const;
};

/// Separating-axis overlap test; touching edges do not count as overlap.
bool overlaps(const OrientedRect& a, const OrientedRect& b);

/// True iff the open segment (a, b) passes through the rectangle's interior
/// or boundary with positive length.
bool segment_intersects(const Vec2& a, const Vec2& b, const OrientedRect& rect);

/// True iff the closed segments [p1,p2] and [q1,q2] intersect.
bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2);

}  // namespace advscen

namespace advscen {

struct Crossing {
  double s_a = 0.0;  // arc length along the first polyline
  double s_b = 0.0;
  Vec2 point;
};

/// First intersection of two polylines ordered by arc length along `a`.
std::optional<Crossing> first_crossing(const Polyline& a, const Polyline& b);

}  // namespace advscen
