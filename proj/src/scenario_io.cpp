#include "advscen/scenario_io.hpp"

#include <fstream>
#include <sstream>

#include "advscen/errors.hpp"

namespace advscen {

namespace {

bool is_scalar(const Json& j) { return !j.is_array() && !j.is_object(); }

bool all_scalars(const Json& j) {
  for (const Json& e : j) {
    if (!is_scalar(e)) return false;
  }
  return true;
}

void write_json(const Json& j, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string inner(static_cast<std::size_t>(indent) + 2, ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += inner;
      out += Json(it.key()).dump();
      out += ": ";
      write_json(it.value(), indent + 2, out);
    }
    out += "\n" + pad + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    if (all_scalars(j)) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ", ";
        out += j[i].dump();
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += ",\n";
      out += inner;
      write_json(j[i], indent + 2, out);
    }
    out += "\n" + pad + "]";
  } else {
    out += j.dump();
  }
}

std::string join(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

template <typename E, typename F>
E require_enum(const Json& j, const std::string& key, const std::string& where, F parse) {
  const std::string s = require_string(j, key, where);
  const auto v = parse(s);
  if (!v) throw ParseError("unknown value `" + s + "` for field `" + join(where, key) + "`", join(where, key));
  return *v;
}

Json trajectory_json(const Agent& a) {
  Json t = Json::object();
  t["agent"] = a.spec.id;
  t["points"] = to_json(a.trajectory.points());
  return t;
}

}  // namespace

std::string format_json(const Json& j) {
  std::string out;
  write_json(j, 0, out);
  out += "\n";
  return out;
}

Json to_json(const Vec2& p) { return Json::array({p.x, p.y}); }

Json to_json(const std::vector<Vec2>& pts) {
  Json a = Json::array();
  for (const Vec2& p : pts) a.push_back(to_json(p));
  return a;
}

Json to_json(const SceneContext& c) {
  Json j = Json::object();
  j["road_type"] = std::string(to_string(c.road));
  j["light_state"] = std::string(to_string(c.light));
  j["town"] = c.town;
  Json lanes = Json::array();
  for (const Lane& l : c.lanes) {
    Json lj = Json::object();
    lj["id"] = l.id;
    lj["width"] = l.width;
    lj["background"] = l.background;
    lj["spawn"] = Json::array({l.spawn_lo, l.spawn_hi});
    if (l.loop > 0.0) lj["loop"] = l.loop;
    lj["centerline"] = to_json(l.centerline.points());
    lanes.push_back(std::move(lj));
  }
  j["lanes"] = std::move(lanes);
  Json stops = Json::array();
  for (const StopLine& s : c.stop_lines) {
    Json sj = Json::object();
    sj["kind"] = std::string(to_string(s.kind));
    sj["a"] = to_json(s.a);
    sj["b"] = to_json(s.b);
    stops.push_back(std::move(sj));
  }
  j["stop_lines"] = std::move(stops);
  j["route"] = to_json(c.route.points());
  j["goal"] = to_json(c.goal);
  Json lim = Json::object();
  lim["car"] = c.limits.car;
  lim["truck"] = c.limits.truck;
  lim["pedestrian"] = c.limits.pedestrian;
  lim["cyclist"] = c.limits.cyclist;
  lim["scooter"] = c.limits.scooter;
  j["class_max_speed"] = std::move(lim);
  Json ann = Json::object();
  for (const auto& [k, v] : c.annotations) ann[k] = v;
  j["annotations"] = std::move(ann);
  return j;
}

Json to_json(const AgentSpec& a) {
  Json j = Json::object();
  j["id"] = a.id;
  j["kind"] = std::string(to_string(a.kind));
  j["class"] = std::string(to_string(a.cls));
  j["length"] = a.footprint.length;
  j["width"] = a.footprint.width;
  j["pose"] = Json::array({a.initial_pose.position.x, a.initial_pose.position.y, a.initial_pose.heading});
  j["behavior"] = std::string(to_string(a.behavior));
  j["lane"] = a.lane;
  return j;
}

Json to_json(const PerturbationRecord& p) {
  Json j = Json::object();
  j["agent"] = p.agent;
  j["keyframe"] = p.keyframe;
  j["window"] = Json::array({p.begin, p.end});
  j["relevance"] = p.relevance;
  j["original"] = to_json(p.original);
  j["optimized"] = to_json(p.optimized);
  return j;
}

const Json& require_field(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw ParseError("expected object at `" + (where.empty() ? "<root>" : where) + "`", where);
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError("missing field `" + join(where, key) + "`", join(where, key));
  return *it;
}

double require_number(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = require_field(j, key, where);
  if (!v.is_number()) throw ParseError("field `" + join(where, key) + "` must be a number", join(where, key));
  return v.get<double>();
}

std::string require_string(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = require_field(j, key, where);
  if (!v.is_string()) throw ParseError("field `" + join(where, key) + "` must be a string", join(where, key));
  return v.get<std::string>();
}

Vec2 vec2_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ParseError("expected [x, y] at `" + where + "`", where);
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Vec2> points_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError("expected point list at `" + where + "`", where);
  std::vector<Vec2> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(vec2_from_json(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

SceneContext context_from_json(const Json& j, const std::string& where) {
  SceneContext c;
  c.road = require_enum<RoadType>(j, "road_type", where, parse_road_type);
  c.light = require_enum<LightState>(j, "light_state", where, parse_light_state);
  if (j.contains("town")) c.town = require_string(j, "town", where);
  const Json& lanes = require_field(j, "lanes", where);
  if (!lanes.is_array()) throw ParseError("field `" + join(where, "lanes") + "` must be a list", join(where, "lanes"));
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const std::string lw = join(where, "lanes[" + std::to_string(i) + "]");
    Lane l;
    l.id = require_string(lanes[i], "id", lw);
    l.width = require_number(lanes[i], "width", lw);
    if (lanes[i].contains("background")) l.background = lanes[i]["background"].get<bool>();
    if (lanes[i].contains("spawn")) {
      const Vec2 sp = vec2_from_json(lanes[i]["spawn"], lw + ".spawn");
      l.spawn_lo = sp.x;
      l.spawn_hi = sp.y;
    }
    if (lanes[i].contains("loop")) l.loop = require_number(lanes[i], "loop", lw);
    l.centerline = Polyline(points_from_json(require_field(lanes[i], "centerline", lw), lw + ".centerline"));
    c.lanes.push_back(std::move(l));
  }
  if (j.contains("stop_lines")) {
    const Json& stops = j["stop_lines"];
    for (std::size_t i = 0; i < stops.size(); ++i) {
      const std::string sw = join(where, "stop_lines[" + std::to_string(i) + "]");
      StopLine s;
      s.kind = require_enum<StopKind>(stops[i], "kind", sw, parse_stop_kind);
      s.a = vec2_from_json(require_field(stops[i], "a", sw), sw + ".a");
      s.b = vec2_from_json(require_field(stops[i], "b", sw), sw + ".b");
      c.stop_lines.push_back(s);
    }
  }
  c.route = Polyline(points_from_json(require_field(j, "route", where), join(where, "route")));
  c.goal = j.contains("goal") ? vec2_from_json(j["goal"], join(where, "goal"))
                              : (c.route.empty() ? Vec2{} : c.route.points().back());
  if (j.contains("class_max_speed")) {
    const Json& lim = j["class_max_speed"];
    const std::string lw = join(where, "class_max_speed");
    c.limits.car = require_number(lim, "car", lw);
    c.limits.truck = require_number(lim, "truck", lw);
    c.limits.pedestrian = require_number(lim, "pedestrian", lw);
    c.limits.cyclist = require_number(lim, "cyclist", lw);
    c.limits.scooter = require_number(lim, "scooter", lw);
  }
  if (j.contains("annotations")) {
    for (auto it = j["annotations"].begin(); it != j["annotations"].end(); ++it) {
      c.annotations[it.key()] = it.value().get<std::string>();
    }
  }
  return c;
}

AgentSpec agent_spec_from_json(const Json& j, const std::string& where) {
  AgentSpec a;
  a.id = require_string(j, "id", where);
  a.kind = require_enum<AgentKind>(j, "kind", where, parse_agent_kind);
  a.cls = require_enum<AgentClass>(j, "class", where, parse_agent_class);
  a.footprint.length = require_number(j, "length", where);
  a.footprint.width = require_number(j, "width", where);
  const Json& pose = require_field(j, "pose", where);
  if (!pose.is_array() || pose.size() != 3) throw ParseError("field `" + where + ".pose` must be [x, y, heading]", where + ".pose");
  a.initial_pose = {{pose[0].get<double>(), pose[1].get<double>()}, pose[2].get<double>()};
  a.behavior = require_enum<Behavior>(j, "behavior", where, parse_behavior);
  if (j.contains("lane")) a.lane = j["lane"].get<int>();
  return a;
}

std::string serialize_scenario(const AdvScenario& s) {
  Json root = Json::object();
  root["version"] = std::string(kScenarioVersion);
  root["dt"] = s.meta.ego.trajectory.dt();
  root["context"] = to_json(s.meta.context);
  Json agents = Json::array();
  Json trajectories = Json::array();
  auto add = [&](const Agent& a) {
    agents.push_back(to_json(a.spec));
    trajectories.push_back(trajectory_json(a));
  };
  add(s.meta.ego);
  if (s.meta.adversary) add(*s.meta.adversary);
  for (const Agent& b : s.backgrounds) add(b);
  root["agents"] = std::move(agents);
  root["trajectories"] = std::move(trajectories);
  Json perts = Json::array();
  for (const PerturbationRecord& p : s.perturbations) perts.push_back(to_json(p));
  root["perturbations"] = std::move(perts);
  return format_json(root);
}

AdvScenario parse_scenario(std::string_view text, std::string_view expected) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n'));
    throw ParseError("scenario syntax error at line " + std::to_string(line) + ": " + e.what(), {}, line);
  }
  try {
    const std::string version = require_string(root, "version", "");
    if (version != expected) {
      throw VersionError("scenario version `" + version + "` does not match expected `" + std::string(expected) + "`");
    }
    const double dt = require_number(root, "dt", "");
    AdvScenario s;
    s.meta.context = context_from_json(require_field(root, "context", ""), "context");
    const Json& agents = require_field(root, "agents", "");
    const Json& trajs = require_field(root, "trajectories", "");
    if (!agents.is_array() || !trajs.is_array() || agents.size() != trajs.size()) {
      throw ParseError("`agents` and `trajectories` must be lists of equal length", "trajectories");
    }
    bool have_ego = false;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const std::string aw = "agents[" + std::to_string(i) + "]";
      const std::string tw = "trajectories[" + std::to_string(i) + "]";
      Agent a;
      a.spec = agent_spec_from_json(agents[i], aw);
      if (require_string(trajs[i], "agent", tw) != a.spec.id) {
        throw ParseError("trajectory order does not match agents at `" + tw + "`", tw + ".agent");
      }
      a.trajectory = Trajectory(dt, points_from_json(require_field(trajs[i], "points", tw), tw + ".points"));
      if (a.spec.kind == AgentKind::kEgo && !have_ego) {
        s.meta.ego = std::move(a);
        have_ego = true;
      } else if (a.spec.kind == AgentKind::kAdversary && !s.meta.adversary) {
        s.meta.adversary = std::move(a);
      } else {
        s.backgrounds.push_back(std::move(a));
      }
    }
    if (!have_ego) throw ParseError("no agent of kind `ego`", "agents");
    const Json& perts = require_field(root, "perturbations", "");
    for (std::size_t i = 0; i < perts.size(); ++i) {
      const std::string pw = "perturbations[" + std::to_string(i) + "]";
      PerturbationRecord p;
      p.agent = static_cast<std::size_t>(require_number(perts[i], "agent", pw));
      p.keyframe = static_cast<std::size_t>(require_number(perts[i], "keyframe", pw));
      const Vec2 w = vec2_from_json(require_field(perts[i], "window", pw), pw + ".window");
      p.begin = static_cast<std::size_t>(w.x);
      p.end = static_cast<std::size_t>(w.y);
      if (perts[i].contains("relevance")) p.relevance = perts[i]["relevance"].get<double>();
      p.original = points_from_json(require_field(perts[i], "original", pw), pw + ".original");
      p.optimized = points_from_json(require_field(perts[i], "optimized", pw), pw + ".optimized");
      s.perturbations.push_back(std::move(p));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed scenario: ") + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open `" + path.string() + "` for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open `" + path.string() + "` for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void save_scenario(const AdvScenario& s, const std::filesystem::path& path) {
  write_text_file(path, serialize_scenario(s));
}

AdvScenario load_scenario(const std::filesystem::path& path, std::string_view expected) {
  return parse_scenario(read_text_file(path), expected);
}

}  // namespace advscen
