#include "advscen/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace advscen {

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

Polyline::Polyline(std::vector<Vec2> points) {
  points_.reserve(points.size());
  for (const Vec2& p : points) {
    if (!points_.empty() && distance(points_.back(), p) < 1e-12) continue;
    points_.push_back(p);
  }
  cumulative_.reserve(points_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (i > 0) acc += distance(points_[i - 1], points_[i]);
    cumulative_.push_back(acc);
  }
}

std::size_t Polyline::segment_index(double s) const {
  if (points_.size() < 2) return 0;
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  std::size_t i = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  return std::min(i, points_.size() - 2);
}

Vec2 Polyline::point_at(double s) const {
  if (points_.empty()) return {};
  if (points_.size() == 1) return points_.front();
  const std::size_t i = segment_index(s);
  const Vec2 d = points_[i + 1] - points_[i];
  const double len = cumulative_[i + 1] - cumulative_[i];
  return points_[i] + d * ((s - cumulative_[i]) / len);
}

Vec2 Polyline::tangent_at(double s) const {
  if (points_.size() < 2) return {1.0, 0.0};
  const std::size_t i = segment_index(s);
  const Vec2 d = points_[i + 1] - points_[i];
  return d / norm(d);
}

double Polyline::curvature_at(double s) const {
  if (points_.size() < 3) return 0.0;
  auto vertex_curvature = [this](std::size_t j) {
    if (j == 0 || j + 1 >= points_.size()) return 0.0;
    const Vec2 a = points_[j] - points_[j - 1];
    const Vec2 b = points_[j + 1] - points_[j];
    const double turn = std::abs(std::atan2(cross(a, b), dot(a, b)));
    return turn / (0.5 * (norm(a) + norm(b)));
  };
  const std::size_t i = segment_index(s);
  return std::max(vertex_curvature(i), vertex_curvature(i + 1));
}

Polyline::Projection Polyline::project(const Vec2& p) const {
  return project(p, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
}

Polyline::Projection Polyline::project(const Vec2& p, double s_lo, double s_hi) const {
  Projection best;
  if (points_.empty()) return best;
  if (points_.size() == 1) {
    best.foot = points_.front();
    best.tangent = {1.0, 0.0};
    best.lateral = cross(best.tangent, p - best.foot);
    return best;
  }
  const std::size_t last = points_.size() - 2;
  const std::size_t first = s_lo > 0.0 ? segment_index(s_lo) : 0;
  const std::size_t stop = s_hi < cumulative_.back() ? segment_index(s_hi) : last;
  if (first > 0 || stop < last) {
    const Projection local = project_range(p, first, stop);
    const bool inside = (first == 0 || local.s > cumulative_[first]) && (stop == last || local.s < cumulative_[stop + 1]);
    if (inside) return local;
  }
  return project_range(p, 0, last);
}

Polyline::Projection Polyline::project_range(const Vec2& p, std::size_t first, std::size_t stop) const {
  Projection best;
  double best_dist = std::numeric_limits<double>::infinity();
  const std::size_t last = points_.size() - 2;
  for (std::size_t i = first; i <= stop; ++i) {
    const Vec2 a = points_[i];
    const Vec2 d = points_[i + 1] - a;
    const double len = cumulative_[i + 1] - cumulative_[i];
    double u = dot(p - a, d) / (len * len);
    if (i > 0) u = std::max(u, 0.0);
    if (i < last) u = std::min(u, 1.0);
    const Vec2 foot = a + d * u;
    const double dist = distance(p, foot);
    if (dist < best_dist) {
      best_dist = dist;
      best.s = cumulative_[i] + u * len;
      best.foot = foot;
      best.tangent = d / len;
    }
  }
  best.lateral = cross(best.tangent, p - best.foot);
  return best;
}

Polyline Polyline::offset(double offset) const {
  if (points_.size() < 2) return *this;
  std::vector<Vec2> out;
  out.reserve(points_.size());
  const std::size_t n = points_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 prev = i > 0 ? left_normal((points_[i] - points_[i - 1]) / norm(points_[i] - points_[i - 1]))
                            : Vec2{};
    const Vec2 next = i + 1 < n ? left_normal((points_[i + 1] - points_[i]) / norm(points_[i + 1] - points_[i]))
                                : Vec2{};
    Vec2 normal = prev + next;
    const double len = norm(normal);
    normal = normal / len;
    const Vec2 ref = i > 0 ? prev : next;
    out.push_back(points_[i] + normal * (offset / dot(normal, ref)));
  }
  return Polyline(std::move(out));
}

Polyline Polyline::reversed() const {
  return Polyline(std::vector<Vec2>(points_.rbegin(), points_.rend()));
}

std::vector<Vec2> arc_points(const Vec2& center, double radius, double start_angle, double sweep,
                             double spacing) {
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(sweep) * radius / spacing)));
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    const double a = start_angle + sweep * k / n;
    pts.push_back(center + unit_from_angle(a) * radius);
  }
  return pts;
}

std::array<Vec2, 4> OrientedRect::corners() const {
  const Vec2 f = unit_from_angle(heading) * (0.5 * length);
  const Vec2 l = left_normal(unit_from_angle(heading)) * (0.5 * width);
  return {center + f + l, center + f - l, center - f - l, center - f + l};
}

bool OrientedRect::contains(const Vec2& p) const {
  const Vec2 u = unit_from_angle(heading);
  const Vec2 d = p - center;
  return std::abs(dot(d, u)) <= 0.5 * length && std::abs(cross(u, d)) <= 0.5 * width;
}

namespace {

void project_onto(const std::array<Vec2, 4>& corners, const Vec2& axis, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const Vec2& c : corners) {
    const double v = dot(c, axis);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
}

}  // namespace

bool overlaps(const OrientedRect& a, const OrientedRect& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const Vec2 ua = unit_from_angle(a.heading);
  const Vec2 ub = unit_from_angle(b.heading);
  const std::array<Vec2, 4> axes{ua, left_normal(ua), ub, left_normal(ub)};
  for (const Vec2& axis : axes) {
    double alo, ahi, blo, bhi;
    project_onto(ca, axis, alo, ahi);
    project_onto(cb, axis, blo, bhi);
    if (ahi <= blo || bhi <= alo) return false;
  }
  return true;
}

bool segment_intersects(const Vec2& a, const Vec2& b, const OrientedRect& rect) {
  const Vec2 u = unit_from_angle(rect.heading);
  const Vec2 v = left_normal(u);
  const Vec2 pa{dot(a - rect.center, u), dot(a - rect.center, v)};
  const Vec2 pb{dot(b - rect.center, u), dot(b - rect.center, v)};
  const Vec2 d = pb - pa;
  double lo = 0.0;
  double hi = 1.0;
  auto clip = [&](double start, double delta, double half) {
    if (delta == 0.0) return std::abs(start) <= half;
    double t1 = (-half - start) / delta;
    double t2 = (half - start) / delta;
    if (t1 > t2) std::swap(t1, t2);
    lo = std::max(lo, t1);
    hi = std::min(hi, t2);
    return lo < hi;
  };
  if (!clip(pa.x, d.x, 0.5 * rect.length)) return false;
  if (!clip(pa.y, d.y, 0.5 * rect.width)) return false;
  return lo < hi;
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
    const double v = cross(b - a, c - a);
    return (v > 0) - (v < 0);
  };
  auto on_segment = [](const Vec2& a, const Vec2& b, const Vec2& c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= c.y &&
           c.y <= std::max(a.y, b.y);
  };
  const int o1 = orient(p1, p2, q1);
  const int o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1);
  const int o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace advscen

namespace advscen {

std::optional<Crossing> first_crossing(const Polyline& a, const Polyline& b) {
  const auto& pa = a.points();
  const auto& pb = b.points();
  std::optional<Crossing> best;
  double sa0 = 0.0;
  for (std::size_t i = 0; i + 1 < pa.size(); ++i) {
    const Vec2 r = pa[i + 1] - pa[i];
    double sb0 = 0.0;
    for (std::size_t j = 0; j + 1 < pb.size(); ++j) {
      const Vec2 q = pb[j + 1] - pb[j];
      const double den = cross(r, q);
      if (den != 0.0) {
        const Vec2 w = pb[j] - pa[i];
        const double u = cross(w, q) / den;
        const double v = cross(w, r) / den;
        if (u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0) {
          const double sa = sa0 + u * norm(r);
          if (!best || sa < best->s_a) best = Crossing{sa, sb0 + v * norm(q), pa[i] + r * u};
        }
      }
      sb0 += norm(q);
    }
    if (best) return best;
    sa0 += norm(r);
  }
  return best;
}

}  // namespace advscen
