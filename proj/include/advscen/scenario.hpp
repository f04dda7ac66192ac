#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advscen/geometry.hpp"

namespace advscen {

inline constexpr double kDefaultDt = 0.1;

enum class AgentKind { kEgo, kAdversary, kBackground };
enum class AgentClass { kCar, kTruck, kPedestrian, kCyclist, kScooter };
enum class Behavior {
  kLaneFollow,
  kStationary,
  kCrossing,
  kSuddenEmergence,
  kRedLightRun,
  kCutIn,
  kHardBrake,
  kLeftTurn,
};
enum class RoadType { kStraight, kIntersection, kTJunction, kRoundabout, kCurve };
enum class LightState { kRed, kYellow, kGreen, kNone };
enum class StopKind { kSignal, kStopSign };

std::string_view to_string(AgentKind v);
std::string_view to_string(AgentClass v);
std::string_view to_string(Behavior v);
std::string_view to_string(RoadType v);
std::string_view to_string(LightState v);
std::string_view to_string(StopKind v);

// Exact-name parsers (kebab-case); return nullopt on unknown names.
std::optional<AgentKind> parse_agent_kind(std::string_view s);
std::optional<AgentClass> parse_agent_class(std::string_view s);
std::optional<Behavior> parse_behavior(std::string_view s);
std::optional<RoadType> parse_road_type(std::string_view s);
std::optional<LightState> parse_light_state(std::string_view s);
std::optional<StopKind> parse_stop_kind(std::string_view s);

/// Uniformly sampled 2D positions. Heading and speed are derived, never stored.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(double dt, std::vector<Vec2> points) : dt_(dt), points_(std::move(points)) {}

  double dt() const { return dt_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Vec2>& points() const { return points_; }
  const Vec2& operator[](std::size_t t) const { return points_[t]; }
  /// Position at frame t, holding the last point beyond the end.
  const Vec2& at_frame(std::size_t t) const { return points_[std::min(t, points_.size() - 1)]; }
  double duration() const { return points_.empty() ? 0.0 : dt_ * static_cast<double>(points_.size() - 1); }

  /// Forward-difference speed; the last frame copies the previous one.
  double speed(std::size_t t) const;
  /// Forward-difference heading, carrying the previous heading over frames
  /// without motion and starting from `fallback`.
  std::vector<double> headings(double fallback = 0.0) const;

  bool operator==(const Trajectory&) const = default;

 private:
  double dt_ = kDefaultDt;
  std::vector<Vec2> points_;
};

/// Linear interpolation onto a new uniform timestep. The first and last
/// positions are preserved exactly; when the duration is not a multiple of
/// `new_dt` the final sample holds the last position.
Trajectory resample_trajectory(const Trajectory& t, double new_dt);

struct Footprint {
  double length = 4.5;
  double width = 1.9;
  bool operator==(const Footprint&) const = default;
};

Footprint default_footprint(AgentClass c);

struct AgentSpec {
  std::string id;
  AgentKind kind = AgentKind::kBackground;
  AgentClass cls = AgentClass::kCar;
  Footprint footprint;
  Pose initial_pose;
  Behavior behavior = Behavior::kLaneFollow;
  int lane = -1;  // index into SceneContext::lanes, -1 when not lane-bound
  bool operator==(const AgentSpec&) const = default;
};

struct Agent {
  AgentSpec spec;
  Trajectory trajectory;
  bool operator==(const Agent&) const = default;
};

struct Lane {
  std::string id;
  Polyline centerline;
  double width = 3.5;
  bool background = false;        // receives background traffic
  double spawn_lo = 0.0;          // arc-length spawn range on the centerline
  double spawn_hi = 0.0;
  double loop = 0.0;              // lap length for closed lanes, 0 when open
  bool operator==(const Lane&) const = default;
};

struct StopLine {
  Vec2 a;
  Vec2 b;
  StopKind kind = StopKind::kSignal;
  bool operator==(const StopLine&) const = default;
};

/// Per-class speed caps in m/s.
struct SpeedLimits {
  double car = 20.0;
  double truck = 20.0;
  double pedestrian = 3.0;
  double cyclist = 8.0;
  double scooter = 8.0;

  double of(AgentClass c) const;
  bool operator==(const SpeedLimits&) const = default;
};

struct SceneContext {
  RoadType road = RoadType::kStraight;
  LightState light = LightState::kNone;  // shown at every listed stop line
  std::string town = "Town01";
  std::vector<Lane> lanes;
  std::vector<StopLine> stop_lines;
  Polyline route;
  Vec2 goal;
  SpeedLimits limits;
  std::map<std::string, std::string> annotations;

  /// Width of the lane the route runs in (nearest lane to the route start).
  double route_lane_width() const;
  bool operator==(const SceneContext&) const = default;
};

/// Ego, one scripted adversary and the scene. The ego trajectory is the
/// nominal route plan used as the frozen reference during evolution.
struct MetaScenario {
  Agent ego;
  std::optional<Agent> adversary;
  SceneContext context;
  double dt() const { return ego.trajectory.dt(); }
  std::size_t frames() const { return ego.trajectory.size(); }
  bool operator==(const MetaScenario&) const = default;
};

struct PerturbationRecord {
  std::size_t agent = 0;     // background index
  std::size_t keyframe = 0;
  std::size_t begin = 0;     // window [begin, end)
  std::size_t end = 0;
  std::vector<Vec2> original;
  std::vector<Vec2> optimized;
  double relevance = 0.0;
  bool operator==(const PerturbationRecord&) const = default;
};

struct AdvScenario {
  MetaScenario meta;
  std::vector<Agent> backgrounds;
  std::vector<PerturbationRecord> perturbations;

  /// Background trajectories with every recorded window restored.
  std::vector<Agent> baseline_backgrounds() const;
  bool operator==(const AdvScenario&) const = default;
};

struct ValidationIssue {
  std::string invariant;  // short invariant name, e.g. "exactly one ego"
  std::string agent;      // offending agent id, empty when scene-level
  long frame = -1;        // offending frame, -1 when not frame-specific
  std::string detail;
};

using ValidationReport = std::vector<ValidationIssue>;

ValidationReport validate_scenario(const MetaScenario& s);
ValidationReport validate_scenario(const AdvScenario& s);
std::string format_report(const ValidationReport& r);

/// Axis-aligned bounds of all lane corridors grown by `margin`.
struct SceneBounds {
  Vec2 lo;
  Vec2 hi;
  bool contains(const Vec2& p) const { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; }
};
SceneBounds scene_bounds(const SceneContext& c, double margin = 10.0);

}  // namespace advscen
