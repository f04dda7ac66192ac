#include "advscen/instantiate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "advscen/errors.hpp"

namespace advscen {

namespace {

double typical_speed(AgentClass c) {
  switch (c) {
    case AgentClass::kPedestrian: return 1.5;
    case AgentClass::kCyclist: return 4.0;
    case AgentClass::kScooter: return 5.0;
    case AgentClass::kCar: return 8.0;
    case AgentClass::kTruck: return 7.0;
  }
  return 5.0;
}

bool is_vehicle(AgentClass c) { return c == AgentClass::kCar || c == AgentClass::kTruck; }

[[noreturn]] void infeasible(const StructuredTuple& s, const std::string& why) {
  throw InstantiationError("cannot realize " + std::string(to_string(s.cls)) + " " + std::string(to_string(s.placement)) +
                           " " + std::string(to_string(s.behavior)) + " on " + std::string(to_string(s.road)) + ": " +
                           why);
}

std::vector<Vec2> sample(std::size_t frames, double dt, const std::function<Vec2(double)>& at) {
  std::vector<Vec2> pts;
  pts.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) pts.push_back(at(static_cast<double>(t) * dt));
  return pts;
}

// Arc length along `path` over time: hold at s0 until t0, then move at v,
// stopping at the path end.
std::function<double(double)> run_profile(double s0, double t0, double v, double s_end) {
  return [=](double t) { return std::min(s_end, s0 + v * std::max(0.0, t - t0)); };
}

struct Timed {
  double s0 = 0.0;
  double t0 = 0.0;
  double v = 0.0;
};

// Motion that reaches arc length `sb` at time `tc`. Waiting agents stand at
// the path start until needed; others start part way along the path.
Timed time_to_conflict(double sb, double tc, double v, double vmax, bool wait) {
  if (sb > v * tc) {
    v = std::min(vmax, tc > 0.0 ? sb / tc : vmax);
    return {std::max(0.0, sb - v * tc), 0.0, v};
  }
  if (wait) return {0.0, tc - sb / v, v};
  return {sb - v * tc, 0.0, v};
}

int lane_index_of(const SceneContext& c, const Polyline& path) {
  for (std::size_t i = 0; i < c.lanes.size(); ++i) {
    if (c.lanes[i].centerline == path) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

Trajectory nominal_ego_trajectory(const Polyline& route, double speed, std::size_t frames, double dt) {
  const double len = route.length();
  return Trajectory(dt, sample(frames, dt, [&](double t) { return route.point_at(std::min(len, speed * t)); }));
}

MetaScenario instantiate_meta(const StructuredTuple& s, const RoadLibrary& lib, const InstantiateOptions& opt) {
  const auto it = lib.find(s.road);
  if (it == lib.end()) throw InstantiationError("road library has no template for `" + std::string(to_string(s.road)) + "`");
  const RoadTemplate& rt = it->second;

  MetaScenario m;
  m.context = rt.context;
  m.context.light = s.light;
  if (s.light != LightState::kNone) {
    if (rt.stop_lines.empty()) infeasible(s, "road has no signalized stop line for a light state");
    m.context.stop_lines = rt.stop_lines;
  }
  const SceneContext& c = m.context;
  const Polyline& route = c.route;
  const double dt = opt.dt;
  const std::size_t T = rt.frames;
  const double v0 = rt.ego_speed;
  const double vmax = c.limits.of(s.cls);

  m.ego.spec.id = "ego";
  m.ego.spec.kind = AgentKind::kEgo;
  m.ego.spec.cls = AgentClass::kCar;
  m.ego.spec.footprint = default_footprint(AgentClass::kCar);
  m.ego.spec.behavior = Behavior::kLaneFollow;
  m.ego.spec.lane = rt.ego_lane;
  const Vec2 t0 = route.tangent_at(0.0);
  m.ego.spec.initial_pose = {route.point_at(0.0), std::atan2(t0.y, t0.x)};
  m.ego.trajectory = nominal_ego_trajectory(route, v0, T, dt);

  const double s_c = s.offset;
  if (s_c < 5.0 || s_c > route.length() - 5.0) infeasible(s, "offset " + std::to_string(s_c) + " m is off the route");
  const double tc = s_c / v0;
  const Vec2 normal = left_normal(route.tangent_at(s_c));
  const Vec2 on_route = route.point_at(s_c);

  auto lane_line = [&](int idx, const char* what) -> const Polyline& {
    if (idx < 0) infeasible(s, std::string("road has no ") + what + " lane");
    return c.lanes[static_cast<std::size_t>(idx)].centerline;
  };
  auto placement_lane = [&]() -> int {
    switch (s.placement) {
      case Placement::kAheadSameLane: return rt.ego_lane;
      case Placement::kAheadAdjacentLane: lane_line(rt.adjacent_lane, "adjacent"); return rt.adjacent_lane;
      case Placement::kOncoming: lane_line(rt.oncoming_lane, "oncoming"); return rt.oncoming_lane;
      default: return -1;
    }
  };
  auto side_lateral = [&]() {
    return s.placement == Placement::kCrossingLeft ? rt.left_roadside : rt.right_roadside;
  };
  auto is_side_placement = [&]() {
    return s.placement == Placement::kOccludedRoadside || s.placement == Placement::kCrossingLeft ||
           s.placement == Placement::kCrossingRight;
  };
  // Straight walk across the road at the conflict point, starting at the roadside.
  auto lateral_path = [&]() {
    const double from = side_lateral();
    const double to = from < 0 ? rt.left_roadside : rt.right_roadside;
    return Polyline({on_route + normal * from, on_route + normal * to});
  };
  auto junction_path = [&]() -> std::optional<Polyline> {
    switch (s.placement) {
      case Placement::kCrossingLeft: return rt.cross_left;
      case Placement::kCrossingRight: return rt.cross_right;
      case Placement::kOncoming: return rt.left_turn;
      default: return std::nullopt;
    }
  };

  Polyline path;
  std::function<Vec2(double)> at;
  int lane = -1;
  std::function<double(double)> prof;
  auto follow = [&](const Polyline& p, std::function<double(double)> f) {
    path = p;
    prof = std::move(f);
    at = [&path, &prof](double t) { return path.point_at(prof(t)); };
  };
  // Path through the junction timed to meet the nominal ego.
  auto junction_run = [&](const Polyline& p, double v) {
    const auto hit = first_crossing(route, p);
    if (!hit) infeasible(s, "junction path does not meet the route");
    const double tcj = hit->s_a / v0;
    const Timed tm = time_to_conflict(hit->s_b, tcj, std::min(v, vmax), vmax, false);
    follow(p, run_profile(tm.s0, tm.t0, tm.v, p.length()));
    lane = lane_index_of(c, p);
  };

  switch (s.behavior) {
    case Behavior::kStationary: {
      Vec2 pos;
      Vec2 dir;
      if (is_side_placement()) {
        pos = on_route + normal * side_lateral();
        dir = side_lateral() < 0 ? normal : -normal;
      } else {
        lane = placement_lane();
        const Polyline& l = c.lanes[static_cast<std::size_t>(lane)].centerline;
        const double ls = l.project(on_route).s;
        pos = l.point_at(ls);
        dir = l.tangent_at(ls);
      }
      path = Polyline({pos, pos + dir});
      at = [pos](double) { return pos; };
      break;
    }
    case Behavior::kLaneFollow: {
      const double v = std::min(vmax, typical_speed(s.cls));
      if (is_side_placement()) {
        follow(route.offset(side_lateral()), {});
        const double ls = path.project(on_route).s;
        prof = run_profile(ls, 0.0, v, path.length());
      } else {
        lane = placement_lane();
        const Polyline& l = c.lanes[static_cast<std::size_t>(lane)].centerline;
        follow(l, run_profile(l.project(on_route).s, 0.0, v, l.length()));
      }
      break;
    }
    case Behavior::kCrossing: {
      if (!is_side_placement()) infeasible(s, "crossing starts from the roadside or a crossing street");
      if (is_vehicle(s.cls)) {
        const auto jp = junction_path();
        if (!jp || s.placement == Placement::kOccludedRoadside) infeasible(s, "no crossing street on that side");
        junction_run(*jp, typical_speed(s.cls));
      } else {
        const Polyline p = lateral_path();
        const Timed tm = time_to_conflict(std::abs(side_lateral()), tc, std::min(vmax, typical_speed(s.cls)), vmax, true);
        follow(p, run_profile(tm.s0, tm.t0, tm.v, p.length()));
      }
      break;
    }
    case Behavior::kSuddenEmergence: {
      if (!is_side_placement()) infeasible(s, "emergence needs a roadside or crossing placement");
      const Polyline p = lateral_path();
      // Starts when the nominal ego is trigger_distance from the conflict
      // point, paced to reach the route at the ego's arrival.
      const double s_lane = std::abs(side_lateral());
      const double v = std::min(vmax, s_lane * v0 / opt.trigger_distance);
      follow(p, run_profile(0.0, std::max(0.0, tc - s_lane / v), v, p.length()));
      break;
    }
    case Behavior::kRedLightRun: {
      if (is_vehicle(s.cls)) {
        const auto jp = junction_path();
        if (!jp) infeasible(s, "no signalized junction approach for that placement");
        junction_run(*jp, 14.0);
      } else {
        if (!is_side_placement()) infeasible(s, "crossing on red starts from the roadside");
        const Polyline p = lateral_path();
        const Timed tm = time_to_conflict(std::abs(side_lateral()), tc, std::min(vmax, typical_speed(s.cls)), vmax, true);
        follow(p, run_profile(tm.s0, tm.t0, tm.v, p.length()));
      }
      break;
    }
    case Behavior::kLeftTurn: {
      if (s.placement != Placement::kOncoming || !rt.left_turn) infeasible(s, "left turns come from an oncoming junction approach");
      junction_run(*rt.left_turn, typical_speed(s.cls));
      break;
    }
    case Behavior::kCutIn: {
      if (s.placement != Placement::kAheadAdjacentLane) infeasible(s, "cut-in starts from the adjacent lane");
      lane = placement_lane();
      const Polyline& l = c.lanes[static_cast<std::size_t>(lane)].centerline;
      const double lat0 = route.project(l.point_at(l.project(on_route).s)).lateral;
      const double v = std::min(vmax, 6.0);
      const double len = default_footprint(s.cls).length;
      const double ego_half = m.ego.spec.footprint.length / 2.0;
      const double closing = v0 - v;
      const double t_trig =
          closing > 0.0 ? std::max(0.0, (s_c - len / 2.0 - ego_half - opt.cut_in_gap) / closing) : 0.0;
      const double dur = opt.cut_in_duration;
      path = route;
      at = [&route, s_c, v, lat0, t_trig, dur](double t) {
        const double sa = s_c + v * t;
        const double u = std::clamp((t - t_trig) / dur, 0.0, 1.0);
        const double lat = lat0 * (1.0 - (3.0 * u * u - 2.0 * u * u * u));
        return route.point_at(sa) + left_normal(route.tangent_at(sa)) * lat;
      };
      break;
    }
    case Behavior::kHardBrake: {
      if (s.placement != Placement::kAheadSameLane && s.placement != Placement::kAheadAdjacentLane) {
        infeasible(s, "a braking lead vehicle must be ahead in a lane");
      }
      lane = placement_lane();
      const Polyline& l = c.lanes[static_cast<std::size_t>(lane)].centerline;
      const double ls = l.project(on_route).s;
      const double v = std::min(vmax, v0);
      const double tb = opt.hard_brake_time;
      const double a = opt.hard_brake_decel;
      follow(l, [=](double t) {
        if (t <= tb) return ls + v * t;
        const double tau = std::min(t - tb, v / a);
        return ls + v * tb + v * tau - 0.5 * a * tau * tau;
      });
      break;
    }
  }

  Agent adv;
  adv.spec.id = "adversary";
  adv.spec.kind = AgentKind::kAdversary;
  adv.spec.cls = s.cls;
  adv.spec.footprint = default_footprint(s.cls);
  adv.spec.behavior = s.behavior;
  adv.spec.lane = lane;
  adv.trajectory = Trajectory(dt, sample(T, dt, at));
  const auto& pts = adv.trajectory.points();
  Vec2 dir = path.tangent_at(0.0);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (distance(pts[i + 1], pts[i]) > 1e-9) {
      dir = pts[i + 1] - pts[i];
      break;
    }
  }
  adv.spec.initial_pose = {pts.front(), std::atan2(dir.y, dir.x)};
  m.adversary = std::move(adv);

  m.context.annotations["placement"] = std::string(to_string(s.placement));
  m.context.annotations["offset"] = std::to_string(static_cast<int>(std::lround(s.offset)));
  m.context.annotations["trigger_distance"] = std::to_string(static_cast<int>(std::lround(opt.trigger_distance)));

  const ValidationReport r = validate_scenario(m);
  if (!r.empty()) infeasible(s, "result violates scenario invariants:\n" + format_report(r));
  return m;
}

}  // namespace advscen
