#include "advscen/scenario.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "advscen/errors.hpp"

namespace advscen {

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s) {
  for (const auto& [v, name] : table) {
    if (name == s) return v;
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E v) {
  for (const auto& [e, name] : table) {
    if (e == v) return name;
  }
  return "?";
}

constexpr std::array<std::pair<AgentKind, std::string_view>, 3> kKinds{{
    {AgentKind::kEgo, "ego"},
    {AgentKind::kAdversary, "adversary"},
    {AgentKind::kBackground, "background"},
}};
constexpr std::array<std::pair<AgentClass, std::string_view>, 5> kClasses{{
    {AgentClass::kCar, "car"},
    {AgentClass::kTruck, "truck"},
    {AgentClass::kPedestrian, "pedestrian"},
    {AgentClass::kCyclist, "cyclist"},
    {AgentClass::kScooter, "scooter"},
}};
constexpr std::array<std::pair<Behavior, std::string_view>, 8> kBehaviors{{
    {Behavior::kLaneFollow, "lane-follow"},
    {Behavior::kStationary, "stationary"},
    {Behavior::kCrossing, "crossing"},
    {Behavior::kSuddenEmergence, "sudden-emergence"},
    {Behavior::kRedLightRun, "red-light-run"},
    {Behavior::kCutIn, "cut-in"},
    {Behavior::kHardBrake, "hard-brake"},
    {Behavior::kLeftTurn, "left-turn"},
}};
constexpr std::array<std::pair<RoadType, std::string_view>, 5> kRoads{{
    {RoadType::kStraight, "straight"},
    {RoadType::kIntersection, "intersection"},
    {RoadType::kTJunction, "t-junction"},
    {RoadType::kRoundabout, "roundabout"},
    {RoadType::kCurve, "curve"},
}};
constexpr std::array<std::pair<LightState, std::string_view>, 4> kLights{{
    {LightState::kRed, "red"},
    {LightState::kYellow, "yellow"},
    {LightState::kGreen, "green"},
    {LightState::kNone, "none"},
}};
constexpr std::array<std::pair<StopKind, std::string_view>, 2> kStops{{
    {StopKind::kSignal, "signal"},
    {StopKind::kStopSign, "stop-sign"},
}};

}  // namespace

std::string_view to_string(AgentKind v) { return name_of(kKinds, v); }
std::string_view to_string(AgentClass v) { return name_of(kClasses, v); }
std::string_view to_string(Behavior v) { return name_of(kBehaviors, v); }
std::string_view to_string(RoadType v) { return name_of(kRoads, v); }
std::string_view to_string(LightState v) { return name_of(kLights, v); }
std::string_view to_string(StopKind v) { return name_of(kStops, v); }

std::optional<AgentKind> parse_agent_kind(std::string_view s) { return lookup(kKinds, s); }
std::optional<AgentClass> parse_agent_class(std::string_view s) { return lookup(kClasses, s); }
std::optional<Behavior> parse_behavior(std::string_view s) { return lookup(kBehaviors, s); }
std::optional<RoadType> parse_road_type(std::string_view s) { return lookup(kRoads, s); }
std::optional<LightState> parse_light_state(std::string_view s) { return lookup(kLights, s); }
std::optional<StopKind> parse_stop_kind(std::string_view s) { return lookup(kStops, s); }

double Trajectory::speed(std::size_t t) const {
  if (points_.size() < 2) return 0.0;
  if (t + 1 >= points_.size()) t = points_.size() - 2;
  return distance(points_[t + 1], points_[t]) / dt_;
}

std::vector<double> Trajectory::headings(double fallback) const {
  std::vector<double> out(points_.size(), fallback);
  double prev = fallback;
  for (std::size_t t = 0; t < points_.size(); ++t) {
    if (t + 1 < points_.size()) {
      const Vec2 d = points_[t + 1] - points_[t];
      if (norm(d) > 1e-9) prev = std::atan2(d.y, d.x);
    }
    out[t] = prev;
  }
  return out;
}

Trajectory resample_trajectory(const Trajectory& t, double new_dt) {
  if (!(new_dt > 0.0) || !std::isfinite(new_dt)) {
    throw DomainError("resample_trajectory: new_dt must be positive, got " + std::to_string(new_dt));
  }
  if (t.size() < 2) return Trajectory(new_dt, t.points());
  const double duration = t.duration();
  const double ratio = duration / new_dt;
  const auto intervals = static_cast<std::size_t>(std::ceil(ratio - 1e-9));
  std::vector<Vec2> out;
  out.reserve(intervals + 1);
  const std::size_t last = t.size() - 1;
  for (std::size_t k = 0; k <= intervals; ++k) {
    const double u = static_cast<double>(k) * new_dt / t.dt();
    const double nearest = std::round(u);
    if (std::abs(u - nearest) < 1e-9) {
      out.push_back(t[std::min(static_cast<std::size_t>(nearest), last)]);
      continue;
    }
    const auto i = static_cast<std::size_t>(std::floor(u));
    if (i >= last) {
      out.push_back(t[last]);
      continue;
    }
    const double frac = u - static_cast<double>(i);
    out.push_back(t[i] + (t[i + 1] - t[i]) * frac);
  }
  out.back() = t[last];
  return Trajectory(new_dt, std::move(out));
}

Footprint default_footprint(AgentClass c) {
  switch (c) {
    case AgentClass::kCar: return {4.5, 1.9};
    case AgentClass::kTruck: return {8.0, 2.5};
    case AgentClass::kPedestrian: return {0.6, 0.6};
    case AgentClass::kCyclist: return {1.8, 0.7};
    case AgentClass::kScooter: return {1.6, 0.7};
  }
  return {};
}

double SpeedLimits::of(AgentClass c) const {
  switch (c) {
    case AgentClass::kCar: return car;
    case AgentClass::kTruck: return truck;
    case AgentClass::kPedestrian: return pedestrian;
    case AgentClass::kCyclist: return cyclist;
    case AgentClass::kScooter: return scooter;
  }
  return car;
}

double SceneContext::route_lane_width() const {
  if (lanes.empty()) return 3.5;
  const Vec2 start = route.empty() ? Vec2{} : route.points().front();
  double best = std::numeric_limits<double>::infinity();
  double width = lanes.front().width;
  for (const Lane& lane : lanes) {
    const double d = std::abs(lane.centerline.project(start).lateral);
    if (d < best) {
      best = d;
      width = lane.width;
    }
  }
  return width;
}

std::vector<Agent> AdvScenario::baseline_backgrounds() const {
  std::vector<Agent> out = backgrounds;
  // Restore in reverse so overlapping records unwind to the first original.
  for (auto it = perturbations.rbegin(); it != perturbations.rend(); ++it) {
    if (it->agent >= out.size()) continue;
    auto pts = out[it->agent].trajectory.points();
    for (std::size_t j = 0; j < it->original.size() && it->begin + j < pts.size(); ++j) {
      pts[it->begin + j] = it->original[j];
    }
    out[it->agent].trajectory = Trajectory(out[it->agent].trajectory.dt(), std::move(pts));
  }
  return out;
}

SceneBounds scene_bounds(const SceneContext& c, double margin) {
  SceneBounds b{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
                {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
  auto grow = [&b](const Vec2& p, double r) {
    b.lo.x = std::min(b.lo.x, p.x - r);
    b.lo.y = std::min(b.lo.y, p.y - r);
    b.hi.x = std::max(b.hi.x, p.x + r);
    b.hi.y = std::max(b.hi.y, p.y + r);
  };
  for (const Lane& lane : c.lanes) {
    for (const Vec2& p : lane.centerline.points()) grow(p, 0.5 * lane.width + margin);
  }
  for (const Vec2& p : c.route.points()) grow(p, margin);
  return b;
}

namespace {

class Checker {
 public:
  explicit Checker(ValidationReport& out) : out_(out) {}

  void add(std::string invariant, std::string agent = {}, long frame = -1, std::string detail = {}) {
    out_.push_back({std::move(invariant), std::move(agent), frame, std::move(detail)});
  }

  void agent(const Agent& a, double dt, std::size_t frames) {
    const AgentSpec& s = a.spec;
    if (!(s.footprint.length > 0.0) || !(s.footprint.width > 0.0)) {
      add("footprint dims > 0", s.id);
    }
    if (s.cls == AgentClass::kPedestrian && (s.footprint.length > 1.0 || s.footprint.width > 1.0)) {
      add("pedestrian footprint <= 1 m x 1 m", s.id);
    }
    const Trajectory& t = a.trajectory;
    if (t.size() < 2) add("trajectory length T >= 2", s.id, -1, "T=" + std::to_string(t.size()));
    if (!(t.dt() > 0.0)) add("dt > 0", s.id);
    if (t.dt() != dt) add("dt identical for all agents", s.id);
    if (t.size() != frames) {
      add("frame count identical for all agents", s.id, -1,
          std::to_string(t.size()) + " vs " + std::to_string(frames));
    }
    for (std::size_t f = 0; f < t.size(); ++f) {
      if (!is_finite(t[f])) {
        add("all coordinates finite", s.id, static_cast<long>(f));
        break;
      }
    }
    if (!is_finite(s.initial_pose.position) || !std::isfinite(s.initial_pose.heading)) {
      add("all coordinates finite", s.id, -1, "initial pose");
    }
  }

  void context(const SceneContext& c) {
    for (const Lane& lane : c.lanes) {
      if (!(lane.width > 2.5)) add("every lane width > 2.5 m", lane.id, -1, std::to_string(lane.width));
    }
    if (c.route.length() <= 0.0) {
      add("route lies within the lane corridor", {}, -1, "empty route");
    } else {
      const double len = c.route.length();
      const int samples = static_cast<int>(std::ceil(len)) + 1;
      for (int k = 0; k < samples; ++k) {
        const Vec2 p = c.route.point_at(std::min(len, static_cast<double>(k)));
        bool inside = false;
        for (const Lane& lane : c.lanes) {
          const auto proj = lane.centerline.project(p);
          if (proj.s >= -1e-6 && proj.s <= lane.centerline.length() + 1e-6 &&
              std::abs(proj.lateral) <= 0.5 * lane.width + 1e-6) {
            inside = true;
            break;
          }
        }
        if (!inside) {
          add("route lies within the lane corridor", {}, -1, "at s=" + std::to_string(k));
          break;
        }
      }
    }
    if (c.light != LightState::kNone && c.stop_lines.empty()) {
      add("stop_lines present whenever L != none");
    }
  }

  void adversary(const Agent& a, const SceneContext& c) {
    if (!scene_bounds(c).contains(a.spec.initial_pose.position)) {
      add("adversary initial pose inside scene bounding box", a.spec.id);
    }
    const double limit = c.limits.of(a.spec.cls);
    const Trajectory& t = a.trajectory;
    for (std::size_t f = 0; f + 1 < t.size(); ++f) {
      if (t.speed(f) > limit * (1.0 + 1e-9)) {
        add("adversary respects class max speed", a.spec.id, static_cast<long>(f),
            std::to_string(t.speed(f)) + " > " + std::to_string(limit));
        break;
      }
    }
  }

 private:
  ValidationReport& out_;
};

void validate_meta_into(const MetaScenario& s, Checker& check, int extra_egos, int extra_adversaries) {
  const double dt = s.ego.trajectory.dt();
  const std::size_t frames = s.ego.trajectory.size();
  if (s.ego.spec.kind != AgentKind::kEgo || extra_egos > 0) {
    check.add("exactly one ego", s.ego.spec.id);
  }
  check.agent(s.ego, dt, frames);
  int adversaries = extra_adversaries;
  if (s.adversary) {
    ++adversaries;
    if (s.adversary->spec.kind != AgentKind::kAdversary) {
      check.add("adversary kind", s.adversary->spec.id);
    }
    check.agent(*s.adversary, dt, frames);
    check.adversary(*s.adversary, s.context);
  }
  if (adversaries > 1) check.add("at most one adversary");
  check.context(s.context);
}

}  // namespace

ValidationReport validate_scenario(const MetaScenario& s) {
  ValidationReport out;
  Checker check(out);
  validate_meta_into(s, check, 0, 0);
  return out;
}

ValidationReport validate_scenario(const AdvScenario& s) {
  ValidationReport out;
  Checker check(out);
  int extra_egos = 0;
  int extra_adversaries = 0;
  for (const Agent& b : s.backgrounds) {
    if (b.spec.kind == AgentKind::kEgo) ++extra_egos;
    if (b.spec.kind == AgentKind::kAdversary) ++extra_adversaries;
  }
  validate_meta_into(s.meta, check, extra_egos, extra_adversaries);
  const double dt = s.meta.ego.trajectory.dt();
  const std::size_t frames = s.meta.ego.trajectory.size();
  for (const Agent& b : s.backgrounds) check.agent(b, dt, frames);
  for (std::size_t r = 0; r < s.perturbations.size(); ++r) {
    const PerturbationRecord& p = s.perturbations[r];
    const std::string tag = "perturbation " + std::to_string(r);
    if (p.agent >= s.backgrounds.size()) {
      check.add("perturbation agent index valid", tag);
      continue;
    }
    const Agent& b = s.backgrounds[p.agent];
    if (!(p.begin < p.end) || p.end > b.trajectory.size()) {
      check.add("perturbation window lies within [0, T)", b.spec.id, static_cast<long>(p.begin));
      continue;
    }
    const std::size_t len = p.end - p.begin;
    if (p.original.size() != len || p.optimized.size() != len) {
      check.add("perturbed and original segments have equal length", b.spec.id);
      continue;
    }
    for (std::size_t j = 0; j < len; ++j) {
      if (!(b.trajectory[p.begin + j] == p.optimized[j])) {
        check.add("perturbed segment spliced into trajectory", b.spec.id, static_cast<long>(p.begin + j));
        break;
      }
    }
  }
  return out;
}

std::string format_report(const ValidationReport& r) {
  std::ostringstream os;
  for (const ValidationIssue& i : r) {
    os << i.invariant;
    if (!i.agent.empty()) os << " [agent " << i.agent << "]";
    if (i.frame >= 0) os << " [frame " << i.frame << "]";
    if (!i.detail.empty()) os << ": " << i.detail;
    os << '\n';
  }
  return os.str();
}

}  // namespace advscen
