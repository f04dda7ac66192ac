#pragma once

#include <cstdint>
#include <vector>

#include "advscen/scenario.hpp"

namespace advscen {

/// Car-following parameters for the background flow (intelligent driver model).
struct FlowConfig {
  double speed_lo = 6.0;       // desired speed range, m/s
  double speed_hi = 12.0;
  double min_gap = 5.0;        // bumper gap, m
  double headway = 1.5;        // s
  double max_accel = 1.5;      // m/s^2
  double comfort_decel = 2.5;  // m/s^2
  double max_decel = 6.0;
  double lateral_accel = 3.0;  // caps speed on curves at sqrt(a R)
  double truck_share = 0.2;
  std::size_t frames = 160;
  double dt = kDefaultDt;
};

/// Largest vehicle count the background lanes hold at the minimum gap.
std::size_t flow_capacity(const SceneContext& c, const FlowConfig& cfg = {});

/// Spawns n vehicles on the background lanes at seeded offsets and records
/// their car-following trajectories for cfg.frames frames. Same-lane bumper
/// gaps never drop below cfg.min_gap. Throws SpawnError beyond capacity.
std::vector<Agent> generate_background_flow(const SceneContext& c, std::size_t n, std::uint64_t seed,
                                            const FlowConfig& cfg = {});

}  // namespace advscen
