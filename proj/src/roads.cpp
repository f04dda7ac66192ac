#include "advscen/roads.hpp"

#include <numbers>

#include "advscen/errors.hpp"

namespace advscen {

namespace {

constexpr double kPi = std::numbers::pi;

double param(const Json& p, const char* key, double fallback) {
  if (!p.contains(key)) return fallback;
  if (!p[key].is_number()) throw ParseError(std::string("road parameter `") + key + "` must be a number", key);
  return p[key].get<double>();
}

void append(std::vector<Vec2>& dst, const std::vector<Vec2>& src) { dst.insert(dst.end(), src.begin(), src.end()); }

// Sub-polyline between arc lengths s0 and s1, keeping the original vertices.
Polyline slice(const Polyline& line, double s0, double s1) {
  std::vector<Vec2> pts{line.point_at(s0)};
  double acc = 0.0;
  const auto& p = line.points();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i > 0) acc += distance(p[i - 1], p[i]);
    if (acc > s0 && acc < s1) pts.push_back(p[i]);
  }
  pts.push_back(line.point_at(s1));
  return Polyline(std::move(pts));
}

Lane make_lane(std::string id, Polyline centerline, double width, bool background = false) {
  Lane l;
  l.id = std::move(id);
  l.centerline = std::move(centerline);
  l.width = width;
  l.background = background;
  return l;
}

// Maps a route-relative spawn range onto a lane's own arc length.
void set_spawn(Lane& lane, const Polyline& route, const Json& p, const char* key, double lo, double hi) {
  if (p.contains(key)) {
    const Vec2 r = vec2_from_json(p[key], key);
    lo = r.x;
    hi = r.y;
  }
  const double a = lane.centerline.project(route.point_at(lo)).s;
  const double b = lane.centerline.project(route.point_at(hi)).s;
  lane.spawn_lo = std::min(a, b);
  lane.spawn_hi = std::max(a, b);
}

// Ego lane, route and the same-direction/oncoming neighbours around an ego
// lane centerline whose arc length `lead_in` is the route start.
void add_main_road(RoadTemplate& t, const Polyline& ego_line, const Json& p, double w, double lead_in,
                   bool oncoming) {
  const double route_length = param(p, "route_length", 140.0);
  if (lead_in + route_length > ego_line.length()) throw DomainError("route exceeds the ego lane");
  SceneContext& c = t.context;
  c.route = slice(ego_line, lead_in, lead_in + route_length);
  c.goal = c.route.points().back();
  c.lanes.push_back(make_lane("ego", ego_line, w));
  t.ego_lane = 0;
  Lane right = make_lane("right", ego_line.offset(-w), w, true);
  set_spawn(right, c.route, p, "right_spawn", -30.0, 90.0);
  c.lanes.push_back(std::move(right));
  t.adjacent_lane = 1;
  if (oncoming) {
    Lane opp = make_lane("oncoming", ego_line.offset(w).reversed(), w, true);
    set_spawn(opp, c.route, p, "oncoming_spawn", 20.0, 139.0);
    c.lanes.push_back(std::move(opp));
    t.oncoming_lane = 2;
  }
  t.right_roadside = -(1.5 * w + param(p, "roadside_margin", 1.25));
  t.left_roadside = 1.5 * w + param(p, "roadside_margin", 1.25);
}

Polyline straight_line(double x0, double x1) { return Polyline({{x0, 0.0}, {x1, 0.0}}); }

// Oncoming traffic turning left from the westbound lane into the southbound
// lane of the cross road at x = xj.
Polyline oncoming_left_turn(double xj, double w, double reach) {
  const double r = 1.5 * w;
  const double x0 = xj - 0.5 * w + r;
  std::vector<Vec2> pts{{xj + reach, w}};
  append(pts, arc_points({x0, w - r}, r, 0.5 * kPi, 0.5 * kPi));
  pts.push_back({xj - 0.5 * w, -reach});
  return Polyline(std::move(pts));
}

void add_junction_stop_lines(RoadTemplate& t, double xj, double w, bool north_arm) {
  const double gap = 1.5 * w + 1.0;
  t.stop_lines.push_back({{xj, -gap}, {xj + w, -gap}, StopKind::kSignal});
  if (north_arm) t.stop_lines.push_back({{xj - w, gap}, {xj, gap}, StopKind::kSignal});
  t.stop_lines.push_back({{xj + w + 1.0, 0.5 * w}, {xj + w + 1.0, 1.5 * w}, StopKind::kSignal});
}

}  // namespace

RoadTemplate build_road_template(RoadType road, const Json& p) {
  RoadTemplate t;
  t.road = road;
  t.context.road = road;
  t.frames = static_cast<std::size_t>(param(p, "frames", 160));
  t.ego_speed = param(p, "ego_speed", 10.0);
  if (p.contains("town")) t.context.town = p["town"].get<std::string>();
  const double w = param(p, "lane_width", 3.5);
  const double lead_in = param(p, "lead_in", 60.0);
  const double tail = param(p, "tail", 100.0);
  const double route_length = param(p, "route_length", 140.0);

  switch (road) {
    case RoadType::kStraight: {
      add_main_road(t, straight_line(-lead_in, route_length + tail), p, w, lead_in, true);
      break;
    }
    case RoadType::kCurve: {
      const double run = param(p, "approach", 40.0);
      const double radius = param(p, "radius", 60.0);
      const double sweep = param(p, "sweep_deg", 90.0) * kPi / 180.0;
      std::vector<Vec2> pts{{-lead_in, 0.0}};
      append(pts, arc_points({run, radius}, radius, -0.5 * kPi, sweep));
      const Vec2 end = pts.back();
      const Vec2 dir = unit_from_angle(sweep);
      pts.push_back(end + dir * (route_length + tail));
      add_main_road(t, Polyline(std::move(pts)), p, w, lead_in, true);
      break;
    }
    case RoadType::kIntersection:
    case RoadType::kTJunction: {
      const bool four_way = road == RoadType::kIntersection;
      const double xj = param(p, "junction_s", 70.0);
      const double reach = param(p, "cross_reach", 90.0);
      add_main_road(t, straight_line(-lead_in, route_length + tail), p, w, lead_in, true);
      auto& lanes = t.context.lanes;
      const double r = 1.5 * w;
      if (four_way) {
        Polyline south({{xj - 0.5 * w, reach}, {xj - 0.5 * w, -reach}});
        Polyline north({{xj + 0.5 * w, -reach}, {xj + 0.5 * w, reach}});
        t.cross_left = south;
        t.cross_right = north;
        lanes.push_back(make_lane("southbound", south, w));
        lanes.push_back(make_lane("northbound", north, w));
      } else {
        // Stem on the right; its traffic turns left across the route.
        std::vector<Vec2> pts{{xj + 0.5 * w, -reach}};
        append(pts, arc_points({xj + 0.5 * w - r, w - r}, r, 0.0, 0.5 * kPi));
        pts.push_back({-lead_in, w});
        t.cross_right = Polyline(std::move(pts));
        lanes.push_back(make_lane("stem-north", Polyline({{xj + 0.5 * w, -reach}, {xj + 0.5 * w, -0.5 * w}}), w));
        lanes.push_back(make_lane("stem-south", Polyline({{xj - 0.5 * w, -0.5 * w}, {xj - 0.5 * w, -reach}}), w));
      }
      t.left_turn = oncoming_left_turn(xj, w, reach);
      add_junction_stop_lines(t, xj, w, four_way);
      t.context.annotations["junction_s"] = std::to_string(static_cast<int>(xj));
      break;
    }
    case RoadType::kRoundabout: {
      const double radius = param(p, "radius", 25.0);
      const double xc = param(p, "approach", 40.0);
      std::vector<Vec2> pts{{-lead_in, 0.0}};
      append(pts, arc_points({xc, radius}, radius, -0.5 * kPi, 0.5 * kPi));
      pts.push_back({xc + radius, radius + route_length + tail});
      const Polyline ego_line(std::move(pts));
      SceneContext& c = t.context;
      c.route = slice(ego_line, lead_in, lead_in + route_length);
      c.goal = c.route.points().back();
      c.lanes.push_back(make_lane("ego", ego_line, w));
      // Three laps so circulating traffic never runs off the polyline end.
      std::vector<Vec2> ring = arc_points({xc, radius}, radius - w, -0.5 * kPi, 6.0 * kPi);
      Lane inner = make_lane("inner-ring", Polyline(std::move(ring)), w, true);
      inner.loop = inner.centerline.length() / 3.0;
      inner.spawn_lo = 0.0;
      inner.spawn_hi = inner.loop;
      c.lanes.push_back(std::move(inner));
      t.adjacent_lane = 1;
      t.right_roadside = -(0.5 * w + param(p, "roadside_margin", 1.25));
      t.left_roadside = 1.5 * w + param(p, "roadside_margin", 1.25);
      break;
    }
  }
  return t;
}

RoadLibrary build_road_library(const Json& doc) {
  const Json& templates = require_field(doc, "templates", "");
  RoadLibrary lib;
  for (auto it = templates.begin(); it != templates.end(); ++it) {
    const auto road = parse_road_type(it.key());
    if (!road) throw ParseError("unknown road type `" + it.key() + "` in road library", it.key());
    lib[*road] = build_road_template(*road, it.value());
  }
  return lib;
}

RoadLibrary load_road_library(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("road library `" + path.string() + "`: " + e.what());
  }
  return build_road_library(doc);
}

}  // namespace advscen
