#include "advscen/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "advscen/errors.hpp"

namespace advscen {

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kGoal: return "goal";
    case Termination::kCollision: return "collision";
    case Termination::kTimeout: return "timeout";
  }
  return "?";
}

std::string_view to_string(RuleEvent e) {
  switch (e) {
    case RuleEvent::kRedLight: return "red-light";
    case RuleEvent::kStopSign: return "stop-sign";
    case RuleEvent::kLaneInvasion: return "lane-invasion";
    case RuleEvent::kOffRoad: return "off-road";
  }
  return "?";
}

void EgoPolicyConfig::validate(double dt) const {
  const double vals[] = {cruise_speed, max_brake, reaction_delay, detection_range, fov, lookahead,
                         comfort_accel, ttc_horizon, goal_tolerance};
  for (double v : vals) {
    if (!(v > 0.0)) throw DomainError("ego policy parameters must be positive");
  }
  if (max_frames == 0) throw DomainError("max_frames must be positive");
  const double steps = reaction_delay / dt;
  if (std::abs(steps - std::round(steps)) > 1e-9) throw DomainError("reaction_delay must be a multiple of dt");
}

std::size_t RolloutLog::count(RuleEvent e) const {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [e](const auto& r) { return r.kind == e; }));
}

bool line_of_sight_occluded(const Vec2& eye, const Vec2& target, const std::vector<OrientedRect>& obstacles) {
  if (eye == target) throw DomainError("line of sight needs distinct endpoints");
  return std::any_of(obstacles.begin(), obstacles.end(),
                     [&](const OrientedRect& r) { return segment_intersects(eye, target, r); });
}

namespace {

// A scripted agent as the ego sees it at one frame.
struct AgentState {
  OrientedRect rect;
  Vec2 velocity;
  double yaw_rate = 0.0;
};

class ScriptedAgent {
 public:
  explicit ScriptedAgent(const Agent& a)
      : agent_(&a), headings_(a.trajectory.headings(a.spec.initial_pose.heading)) {}

  const AgentSpec& spec() const { return agent_->spec; }

  AgentState at(std::size_t f) const {
    const Trajectory& tr = agent_->trajectory;
    const std::size_t n = tr.size();
    const std::size_t i = std::min(f, n - 1);
    AgentState s;
    s.rect = {tr[i], headings_[i], spec().footprint.length, spec().footprint.width};
    if (f >= n - 1 || n < 2) return s;  // parked at the end of its script
    const double dt = tr.dt();
    if (i == 0) {
      s.velocity = (tr[1] - tr[0]) / dt;
    } else {
      s.velocity = (tr[i] - tr[i - 1]) / dt;
      s.yaw_rate = wrap_angle(headings_[i] - headings_[i - 1]) / dt;
    }
    return s;
  }

 private:
  const Agent* agent_;
  std::vector<double> headings_;
};

OrientedRect ego_rect(const Pose& p, const Footprint& fp, double front_margin = 0.0) {
  const Vec2 shift = unit_from_angle(p.heading) * (0.5 * front_margin);
  return {p.position + shift, p.heading, fp.length + front_margin, fp.width};
}

Vec2 contact_point(const OrientedRect& a, const OrientedRect& b) {
  for (const Vec2& c : a.corners()) {
    if (b.contains(c)) return c;
  }
  for (const Vec2& c : b.corners()) {
    if (a.contains(c)) return c;
  }
  return (a.center + b.center) * 0.5;
}

double off_road_distance(const SceneContext& c, const Vec2& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const Lane& l : c.lanes) {
    const auto pr = l.centerline.project(p);
    best = std::min(best, std::abs(pr.lateral) - 0.5 * l.width);
  }
  return std::max(0.0, best);
}

}  // namespace

RolloutLog simulate_closed_loop(const AdvScenario& s, const EgoPolicyConfig& cfg) {
  const double dt = s.meta.dt();
  cfg.validate(dt);
  const SceneContext& ctx = s.meta.context;
  const Polyline& route = ctx.route;
  const Footprint ego_fp = s.meta.ego.spec.footprint;

  std::vector<ScriptedAgent> agents;
  if (s.meta.adversary) agents.emplace_back(*s.meta.adversary);
  for (const Agent& b : s.backgrounds) agents.emplace_back(b);
  const bool has_adv = s.meta.adversary.has_value();

  RolloutLog log;
  log.dt = dt;
  log.route_length = route.length();
  log.lane_half_width = 0.5 * ctx.route_lane_width();

  const std::size_t delay_frames = static_cast<std::size_t>(std::lround(cfg.reaction_delay / dt));
  const std::size_t horizon_steps = static_cast<std::size_t>(std::ceil(cfg.ttc_horizon / dt));
  const std::size_t stop_window = static_cast<std::size_t>(std::lround(3.0 / dt));
  std::vector<long> first_seen(agents.size(), -1);

  Pose pose = s.meta.ego.spec.initial_pose;
  if (!s.meta.ego.trajectory.empty()) pose.position = s.meta.ego.trajectory[0];
  double speed = std::min(cfg.cruise_speed, s.meta.ego.trajectory.size() > 1 ? s.meta.ego.trajectory.speed(0)
                                                                               : cfg.cruise_speed);
  bool was_invading = false;
  bool was_off_road = false;
  std::vector<AgentState> states(agents.size());
  std::vector<OrientedRect> obstacles;
  obstacles.reserve(agents.size());

  for (std::size_t f = 0; f < cfg.max_frames; ++f) {
    EgoFrame fr;
    fr.pose = pose;
    fr.speed = speed;
    const auto proj = route.project(pose.position);
    fr.progress = std::clamp(proj.s, 0.0, log.route_length);
    fr.lateral = proj.lateral;
    fr.off_road = off_road_distance(ctx, pose.position);
    for (std::size_t i = 0; i < agents.size(); ++i) states[i] = agents[i].at(f);

    // Rule events on the state reached this frame.
    const bool invading = std::abs(fr.lateral) + 0.5 * ego_fp.width > log.lane_half_width + 1e-9;
    if (invading && !was_invading) log.events.push_back({RuleEvent::kLaneInvasion, f});
    was_invading = invading;
    const bool off = fr.off_road > 0.0;
    if (off && !was_off_road) log.events.push_back({RuleEvent::kOffRoad, f});
    was_off_road = off;

    // Perception.
    const Vec2 fwd = unit_from_angle(pose.heading);
    const Vec2 eye = pose.position + fwd * (0.5 * ego_fp.length);
    std::vector<bool> perceived(agents.size(), false);
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const OrientedRect& r = states[i].rect;
      const Vec2 to = r.center - eye;
      bool visible = norm(to) <= cfg.detection_range &&
                     std::abs(wrap_angle(std::atan2(to.y, to.x) - pose.heading)) <= 0.5 * cfg.fov;
      if (visible) {
        obstacles.clear();
        for (std::size_t j = 0; j < agents.size(); ++j) {
          if (j != i) obstacles.push_back(states[j].rect);
        }
        const auto corners = r.corners();
        const Vec2 targets[] = {r.center, corners[0], corners[1], corners[2], corners[3]};
        visible = std::any_of(std::begin(targets), std::end(targets), [&](const Vec2& t) {
          return distance(t, eye) > 1e-9 && !line_of_sight_occluded(eye, t, obstacles);
        });
      }
      if (visible && first_seen[i] < 0) first_seen[i] = static_cast<long>(f);
      perceived[i] = visible && f >= static_cast<std::size_t>(first_seen[i]) + delay_frames;
      if (i == 0 && has_adv) fr.adversary_visible = visible;
    }

    // Collision on the current frame ends the rollout.
    const OrientedRect me = ego_rect(pose, ego_fp);
    for (std::size_t i = 0; i < agents.size(); ++i) {
      if (overlaps(me, states[i].rect)) {
        log.collisions.push_back({f, agents[i].spec().id, contact_point(me, states[i].rect)});
        break;
      }
    }
    if (!log.collisions.empty()) {
      log.frames.push_back(fr);
      log.termination = Termination::kCollision;
      return log;
    }
    if (fr.progress >= log.route_length - cfg.goal_tolerance) {
      log.frames.push_back(fr);
      log.termination = Termination::kGoal;
      return log;
    }

    // Threat: any perceived agent, predicted at constant speed and turn rate,
    // overlapping the ego advanced along the route at its current speed.
    bool threat = false;
    for (std::size_t i = 0; i < agents.size() && !threat; ++i) {
      if (!perceived[i]) continue;
      const AgentState& a = states[i];
      Vec2 p = a.rect.center;
      double h = a.rect.heading;
      const double v = norm(a.velocity);
      if (v > 1e-9) h = std::atan2(a.velocity.y, a.velocity.x);
      for (std::size_t k = 0; k <= horizon_steps && !threat; ++k) {
        if (k > 0) {
          p += unit_from_angle(h + 0.5 * a.yaw_rate * dt) * (v * dt);
          h += a.yaw_rate * dt;
        }
        const double se = fr.progress + speed * dt * static_cast<double>(k);
        const Vec2 tan = route.tangent_at(se);
        const Pose ep{k == 0 ? pose.position : route.point_at(se), k == 0 ? pose.heading : std::atan2(tan.y, tan.x)};
        const OrientedRect other{p, v > 1e-9 ? h : a.rect.heading, a.rect.length, a.rect.width};
        threat = overlaps(ego_rect(ep, ego_fp, cfg.front_margin), other);
      }
    }

    const double a_cmd = threat ? -cfg.max_brake : std::min(cfg.comfort_accel, (cfg.cruise_speed - speed) / dt);
    const double v_new = std::clamp(speed + a_cmd * dt, 0.0, cfg.cruise_speed);
    fr.accel = (v_new - speed) / dt;

    // Pure pursuit toward the route point one lookahead ahead.
    const Vec2 target = route.point_at(fr.progress + cfg.lookahead);
    const Vec2 d = target - pose.position;
    const double alpha = wrap_angle(std::atan2(d.y, d.x) - pose.heading);
    const double curvature = 2.0 * std::sin(alpha) / std::max(norm(d), 1e-6);
    const double v_avg = 0.5 * (speed + v_new);
    fr.yaw_rate = v_avg * curvature;
    log.frames.push_back(fr);

    Pose next = pose;
    next.position += unit_from_angle(pose.heading + 0.5 * fr.yaw_rate * dt) * (v_avg * dt);
    next.heading = wrap_angle(pose.heading + fr.yaw_rate * dt);

    // Stop lines crossed by the front bumper on this step.
    const Vec2 front_next = next.position + unit_from_angle(next.heading) * (0.5 * ego_fp.length);
    for (const StopLine& sl : ctx.stop_lines) {
      if (!segments_intersect(eye, front_next, sl.a, sl.b)) continue;
      if (sl.kind == StopKind::kSignal && ctx.light == LightState::kRed) {
        log.events.push_back({RuleEvent::kRedLight, f + 1});
      } else if (sl.kind == StopKind::kStopSign) {
        const std::size_t from = log.frames.size() > stop_window ? log.frames.size() - stop_window : 0;
        const bool stopped = std::any_of(log.frames.begin() + static_cast<long>(from), log.frames.end(),
                                         [](const EgoFrame& e) { return e.speed < 0.1; });
        if (!stopped) log.events.push_back({RuleEvent::kStopSign, f + 1});
      }
    }
    pose = next;
    speed = v_new;
  }
  log.termination = Termination::kTimeout;
  return log;
}

Json to_json(const RolloutLog& log) {
  Json j;
  j["dt"] = log.dt;
  j["termination"] = std::string(to_string(log.termination));
  j["route_length"] = log.route_length;
  j["lane_half_width"] = log.lane_half_width;
  Json cols = Json::array();
  for (const char* c : {"x", "y", "heading", "speed", "accel", "yaw_rate", "progress", "lateral", "off_road", "visible"})
    cols.push_back(c);
  j["columns"] = cols;
  Json rows = Json::array();
  for (const EgoFrame& f : log.frames) {
    rows.push_back(Json::array({f.pose.position.x, f.pose.position.y, f.pose.heading, f.speed, f.accel, f.yaw_rate,
                                f.progress, f.lateral, f.off_road, f.adversary_visible ? 1 : 0}));
  }
  j["frames"] = rows;
  Json col = Json::array();
  for (const CollisionEvent& c : log.collisions) {
    col.push_back({{"frame", c.frame}, {"other", c.other}, {"contact", to_json(c.contact)}});
  }
  j["collisions"] = col;
  Json ev = Json::array();
  for (const RuleEventRecord& e : log.events) ev.push_back({{"kind", std::string(to_string(e.kind))}, {"frame", e.frame}});
  j["events"] = ev;
  return j;
}

std::string rollout_csv(const RolloutLog& log) {
  std::string out = "frame,x,y,speed,accel,yaw_rate,visible\n";
  char buf[256];
  for (std::size_t i = 0; i < log.frames.size(); ++i) {
    const EgoFrame& f = log.frames[i];
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n", i, f.pose.position.x, f.pose.position.y,
                  f.speed, f.accel, f.yaw_rate, f.adversary_visible ? 1 : 0);
    out += buf;
  }
  return out;
}

}  // namespace advscen
