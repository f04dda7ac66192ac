#pragma once

#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "advscen/scenario.hpp"
#include "advscen/scenario_io.hpp"

namespace advscen {

struct EgoPolicyConfig {
  double cruise_speed = 10.0;
  double max_brake = 6.0;
  double reaction_delay = 0.3;   // seconds between first detection and reacting
  double detection_range = 50.0;
  double fov = std::numbers::pi;  // full field of view, centered on the heading
  double lookahead = 6.0;        // pure-pursuit lookahead distance
  double comfort_accel = 2.0;
  double ttc_horizon = 2.5;      // constant-velocity prediction horizon, s
  double front_margin = 2.0;     // predicted ego footprint is grown forward by this
  double goal_tolerance = 2.0;
  std::size_t max_frames = 600;

  /// Throws DomainError unless every field is positive and the reaction delay
  /// is a whole number of `dt` steps.
  void validate(double dt) const;
};

enum class Termination { kGoal, kCollision, kTimeout };
enum class RuleEvent { kRedLight, kStopSign, kLaneInvasion, kOffRoad };

std::string_view to_string(Termination t);
std::string_view to_string(RuleEvent e);

struct EgoFrame {
  Pose pose;
  double speed = 0.0;
  double accel = 0.0;
  double yaw_rate = 0.0;
  double progress = 0.0;   // arc length along the route
  double lateral = 0.0;    // signed offset from the route
  double off_road = 0.0;   // distance beyond the nearest lane edge, 0 on the road
  bool adversary_visible = false;
  bool operator==(const EgoFrame&) const = default;
};

struct CollisionEvent {
  std::size_t frame = 0;
  std::string other;
  Vec2 contact;
  bool operator==(const CollisionEvent&) const = default;
};

struct RuleEventRecord {
  RuleEvent kind = RuleEvent::kLaneInvasion;
  std::size_t frame = 0;
  bool operator==(const RuleEventRecord&) const = default;
};

struct RolloutLog {
  double dt = kDefaultDt;
  std::vector<EgoFrame> frames;
  std::vector<CollisionEvent> collisions;
  std::vector<RuleEventRecord> events;
  Termination termination = Termination::kTimeout;
  double route_length = 0.0;
  double lane_half_width = 1.75;

  std::size_t count(RuleEvent e) const;
  bool operator==(const RolloutLog&) const = default;
};

/// True iff the open segment (eye, target) meets any obstacle. Callers leave
/// the ego's and the target's own footprints out of `obstacles`.
bool line_of_sight_occluded(const Vec2& eye, const Vec2& target, const std::vector<OrientedRect>& obstacles);

/// Replays the scripted agents and drives the ego with the occlusion-aware
/// policy until goal, first collision or cfg.max_frames.
RolloutLog simulate_closed_loop(const AdvScenario& s, const EgoPolicyConfig& cfg = {});

Json to_json(const RolloutLog& log);
/// Per-frame CSV: frame,x,y,speed,accel,yaw_rate,visible
std::string rollout_csv(const RolloutLog& log);

}  // namespace advscen
