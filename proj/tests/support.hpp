#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "advscen/perturb.hpp"
#include "advscen/pipeline.hpp"
#include "advscen/rng.hpp"
#include "advscen/scenario.hpp"
#include "advscen/sim.hpp"

namespace advscen::testing {

inline std::filesystem::path data_dir() { return ADVSCEN_DATA_DIR; }

inline const Resources& shipped_resources() {
  static const Resources r = load_resources(RunConfig{});
  return r;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("advscen_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Constant-velocity straight line.
inline std::vector<Vec2> line_points(Vec2 start, Vec2 step, std::size_t n) {
  std::vector<Vec2> pts;
  pts.reserve(n);
  for (std::size_t t = 0; t < n; ++t) pts.push_back(start + step * static_cast<double>(t));
  return pts;
}

/// Two-lane straight road along +x: ego lane at y = 0, left lane at y = 3.5.
inline SceneContext straight_context(double length = 200.0) {
  SceneContext c;
  c.road = RoadType::kStraight;
  Lane ego_lane;
  ego_lane.id = "ego";
  ego_lane.centerline = Polyline({{-20.0, 0.0}, {length, 0.0}});
  Lane left = ego_lane;
  left.id = "left";
  left.centerline = Polyline({{-20.0, 3.5}, {length, 3.5}});
  c.lanes = {ego_lane, left};
  c.route = Polyline({{0.0, 0.0}, {length - 10.0, 0.0}});
  c.goal = c.route.points().back();
  return c;
}

inline Agent make_agent(const std::string& id, AgentKind kind, AgentClass cls, std::vector<Vec2> pts,
                        double dt = kDefaultDt) {
  Agent a;
  a.spec.id = id;
  a.spec.kind = kind;
  a.spec.cls = cls;
  a.spec.footprint = default_footprint(cls);
  a.spec.initial_pose = {pts.front(), 0.0};
  a.trajectory = Trajectory(dt, std::move(pts));
  return a;
}

/// Ego driving the route at `speed` for `frames` frames, no adversary.
inline MetaScenario straight_meta(std::size_t frames = 100, double speed = 10.0) {
  MetaScenario m;
  m.context = straight_context();
  m.ego = make_agent("ego", AgentKind::kEgo, AgentClass::kCar, line_points({0.0, 0.0}, {speed * kDefaultDt, 0.0}, frames));
  return m;
}

/// Randomized valid scenario with up to 10 backgrounds and perturbation
/// records, for serialization properties.
inline AdvScenario random_scenario(Rng& rng) {
  AdvScenario s;
  const std::size_t frames = 2 + rng.below(30);
  const double dt = 0.05 * static_cast<double>(1 + rng.below(4));
  auto random_points = [&](double spread) {
    std::vector<Vec2> pts;
    Vec2 p{rng.uniform(-spread, spread), rng.uniform(-5.0, 5.0)};
    for (std::size_t t = 0; t < frames; ++t) {
      pts.push_back(p);
      p += Vec2{rng.uniform(0.0, 1.5), rng.uniform(-0.2, 0.2)};
    }
    return pts;
  };
  SceneContext& c = s.meta.context;
  c = straight_context(100.0 + rng.uniform(0.0, 200.0));
  c.road = static_cast<RoadType>(rng.below(5));
  c.light = static_cast<LightState>(rng.below(4));
  if (c.light != LightState::kNone || rng.below(2) == 0) {
    c.stop_lines.push_back({{rng.uniform(10.0, 50.0), -1.75}, {rng.uniform(10.0, 50.0), 1.75},
                            static_cast<StopKind>(rng.below(2))});
  }
  c.lanes[1].background = true;
  c.lanes[1].spawn_hi = rng.uniform(0.0, 80.0);
  c.limits.car = rng.uniform(15.0, 25.0);
  c.annotations["note"] = "seed " + std::to_string(rng.below(1000));
  s.meta.ego = make_agent("ego", AgentKind::kEgo, AgentClass::kCar, random_points(5.0), dt);
  s.meta.ego.spec.initial_pose.heading = rng.uniform(-3.0, 3.0);
  if (rng.below(4) != 0) {
    const auto cls = static_cast<AgentClass>(rng.below(5));
    s.meta.adversary = make_agent("adv", AgentKind::kAdversary, cls, random_points(30.0), dt);
    s.meta.adversary->spec.behavior = static_cast<Behavior>(rng.below(8));
  }
  const std::size_t n = rng.below(11);
  for (std::size_t i = 0; i < n; ++i) {
    Agent b = make_agent("bg" + std::to_string(i), AgentKind::kBackground,
                         rng.below(5) == 0 ? AgentClass::kTruck : AgentClass::kCar, random_points(60.0), dt);
    b.spec.lane = static_cast<int>(rng.below(2));
    s.backgrounds.push_back(std::move(b));
  }
  for (std::size_t i = 0; i < n && i < 4; ++i) {
    PerturbationRecord r;
    r.agent = i;
    r.begin = rng.below(frames - 1);
    r.end = r.begin + 1 + rng.below(frames - r.begin);
    r.keyframe = r.begin + rng.below(r.end - r.begin);
    r.relevance = rng.uniform(0.0, 40.0);
    auto pts = s.backgrounds[i].trajectory.points();
    for (std::size_t t = r.begin; t < r.end; ++t) {
      r.original.push_back(pts[t]);
      pts[t] += Vec2{rng.uniform(-1.0, 1.0), rng.uniform(-0.5, 0.5)};
      r.optimized.push_back(pts[t]);
    }
    s.backgrounds[i].trajectory = Trajectory(dt, std::move(pts));
    s.perturbations.push_back(std::move(r));
  }
  return s;
}

/// Randomized optimizer problem: ego driving along +x, adversary ahead and to
/// the right, one background in the left lane with a corridor constraint.
struct ToyProblem {
  std::vector<Vec2> seg, ego, adv;
  LossWeights w;
  FeasibilityConstraints c;
};

inline ToyProblem toy_problem(Rng& rng, std::size_t frames = 60) {
  ToyProblem p;
  const double v_ego = rng.uniform(6.0, 12.0);
  const double v_bg = rng.uniform(4.0, 14.0);
  const Vec2 adv0{rng.uniform(20.0, 60.0), rng.uniform(-8.0, -2.0)};
  const Vec2 adv_step{rng.uniform(-0.1, 0.1), rng.uniform(0.0, 0.3)};
  p.ego = line_points({0.0, 0.0}, {v_ego * kDefaultDt, 0.0}, frames);
  p.adv = line_points(adv0, adv_step, frames);
  p.seg = line_points({rng.uniform(-10.0, 30.0), 3.5}, {v_bg * kDefaultDt, 0.0}, frames);
  p.c.corridor = Polyline({{-50.0, 3.5}, {200.0, 3.5}});
  p.c.half_width = rng.uniform(0.3, 1.0);
  p.c.v_max = 20.0;
  p.w = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
  return p;
}

inline constexpr double kPedX = 40.0;

/// Order-independent digest of every file (path and bytes) under `root`.
inline std::uint64_t tree_digest(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) {
    all += std::filesystem::relative(f, root).generic_string();
    all += '\0';
    all += read_text_file(f);
    all += '\0';
  }
  return fnv1a(all);
}

/// Regular files directly named `name` anywhere under `root`.
inline std::size_t count_files(const std::filesystem::path& root, const std::string& name) {
  std::size_t n = 0;
  if (!std::filesystem::exists(root)) return 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() == name) ++n;
  }
  return n;
}

// Stopping-distance scenes on the straight road.

// Pedestrian waiting at y = -4 beside the ego lane at x = 40, setting off at
// frame `start` at 2.5 m/s and stopping on the lane center.
inline Agent crossing_pedestrian(std::size_t start, std::size_t frames = 160) {
  std::vector<Vec2> pts;
  double y = -4.0;
  for (std::size_t t = 0; t < frames; ++t) {
    pts.push_back({kPedX, y});
    if (t >= start) y = std::min(0.0, y + 0.25);
  }
  Agent a = make_agent("adv", AgentKind::kAdversary, AgentClass::kPedestrian, pts);
  a.spec.behavior = Behavior::kCrossing;
  a.spec.initial_pose.heading = std::numbers::pi / 2;
  return a;
}

inline Agent parked_truck() {
  Agent t = make_agent("bg00", AgentKind::kBackground, AgentClass::kTruck,
                       std::vector<Vec2>(160, Vec2{kPedX - 6.0, -3.5}));
  t.spec.behavior = Behavior::kStationary;
  return t;
}

inline AdvScenario stopping_scene(std::size_t start, bool occluded) {
  AdvScenario s;
  s.meta = straight_meta(160, 10.0);
  s.meta.adversary = crossing_pedestrian(start);
  if (occluded) s.backgrounds.push_back(parked_truck());
  return s;
}

// Gap from the ego front bumper to the pedestrian's near edge on the first
// frame the pedestrian is visible.
inline double detection_gap(const AdvScenario& s, const RolloutLog& log) {
  const double half_len = 0.5 * s.meta.ego.spec.footprint.length;
  const double ped_half = 0.5 * s.meta.adversary->spec.footprint.width;
  for (const EgoFrame& f : log.frames) {
    if (f.adversary_visible) return kPedX - ped_half - (f.pose.position.x + half_len);
  }
  return -INFINITY;
}

}  // namespace advscen::testing
