#include "advscen/scenic.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "advscen/errors.hpp"

namespace advscen {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s == "-0.00" || s == "-0.0" || s == "-0") s.erase(0, 1);
  return s;
}

bool is_ident(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

// Scenic headings are measured counter-clockwise from +y in degrees.
std::string scenic_heading(double heading) {
  return fixed(wrap_angle(heading - std::numbers::pi / 2.0) * 180.0 / std::numbers::pi, 1);
}

std::string blueprint(AgentClass c) {
  switch (c) {
    case AgentClass::kCar: return "Car";
    case AgentClass::kTruck: return "Truck";
    case AgentClass::kPedestrian: return "Pedestrian";
    case AgentClass::kCyclist: return "Bicycle";
    case AgentClass::kScooter: return "Motorcycle";
  }
  return "Car";
}

std::string behavior_call(Behavior b) {
  switch (b) {
    case Behavior::kLaneFollow: return "FollowLaneBehavior(target_speed=speed)";
    case Behavior::kStationary: return "WaitBehavior()";
    case Behavior::kCrossing: return "CrossingBehavior(ego, speed, trigger)";
    case Behavior::kSuddenEmergence: return "EmergeBehavior(ego, speed, trigger)";
    case Behavior::kRedLightRun: return "RunRedLightBehavior(ego, speed)";
    case Behavior::kCutIn: return "CutInBehavior(ego, speed, trigger)";
    case Behavior::kHardBrake: return "HardBrakeBehavior(speed, brake=1.0)";
    case Behavior::kLeftTurn: return "LeftTurnBehavior(ego, speed)";
  }
  return "WaitBehavior()";
}

double max_speed(const Trajectory& t) {
  double v = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) v = std::max(v, t.speed(i));
  return v;
}

std::string annotation(const SceneContext& c, const std::string& key, const std::string& fallback) {
  const auto it = c.annotations.find(key);
  return it == c.annotations.end() ? fallback : it->second;
}

}  // namespace

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& slots) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const std::size_t close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        const std::string_view name = tmpl.substr(i + 1, close - i - 1);
        if (is_ident(name)) {
          const auto it = slots.find(std::string(name));
          if (it == slots.end()) throw ParseError("template slot `{" + std::string(name) + "}` has no value", std::string(name));
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

bool has_unfilled_slot(std::string_view text) {
  std::size_t i = 0;
  while ((i = text.find('{', i)) != std::string_view::npos) {
    const std::size_t close = text.find('}', i);
    if (close == std::string_view::npos) return false;
    if (is_ident(text.substr(i + 1, close - i - 1))) return true;
    ++i;
  }
  return false;
}

std::map<std::string, std::string> scenic_slots(const MetaScenario& m) {
  std::map<std::string, std::string> s;
  const SceneContext& c = m.context;
  s["town"] = c.town;
  s["road"] = std::string(to_string(c.road));
  s["light"] = std::string(to_string(c.light));
  s["frames"] = std::to_string(m.frames());
  s["dt"] = fixed(m.dt(), 2);
  s["route_length"] = fixed(c.route.length(), 1);
  s["goal_x"] = fixed(c.goal.x, 2);
  s["goal_y"] = fixed(c.goal.y, 2);
  s["ego_x"] = fixed(m.ego.spec.initial_pose.position.x, 2);
  s["ego_y"] = fixed(m.ego.spec.initial_pose.position.y, 2);
  s["ego_heading"] = scenic_heading(m.ego.spec.initial_pose.heading);
  s["ego_speed"] = fixed(max_speed(m.ego.trajectory), 1);
  s["placement"] = annotation(c, "placement", "unspecified");
  s["offset"] = annotation(c, "offset", "0");
  s["trigger_distance"] = annotation(c, "trigger_distance", "0");
  if (m.adversary) {
    const Agent& a = *m.adversary;
    s["adv_class"] = blueprint(a.spec.cls);
    s["adv_kind"] = std::string(to_string(a.spec.cls));
    s["adv_x"] = fixed(a.spec.initial_pose.position.x, 2);
    s["adv_y"] = fixed(a.spec.initial_pose.position.y, 2);
    s["adv_heading"] = scenic_heading(a.spec.initial_pose.heading);
    s["adv_speed"] = fixed(max_speed(a.trajectory), 1);
    s["adv_behavior"] = std::string(to_string(a.spec.behavior));
    s["adv_behavior_call"] = behavior_call(a.spec.behavior);
  } else {
    s["adv_class"] = "Car";
    s["adv_kind"] = "none";
    s["adv_x"] = s["adv_y"] = "0.00";
    s["adv_heading"] = "0.0";
    s["adv_speed"] = "0.0";
    s["adv_behavior"] = "none";
    s["adv_behavior_call"] = behavior_call(Behavior::kStationary);
  }
  return s;
}

std::string emit_scenic(const MetaScenario& m, std::string_view tmpl) { return fill_template(tmpl, scenic_slots(m)); }

}  // namespace advscen
