#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>

#include "advscen/scenario.hpp"
#include "advscen/scenario_io.hpp"

namespace advscen {

/// Scene skeleton for one road type plus the anchors used to place an
/// adversary. Coordinates are scene-local: the route starts at the origin
/// with the ego heading along +x.
struct RoadTemplate {
  RoadType road = RoadType::kStraight;
  SceneContext context;             // light none, no stop lines
  std::vector<StopLine> stop_lines; // shown when a light state is set
  std::size_t frames = 160;
  double ego_speed = 10.0;          // nominal route speed
  int ego_lane = 0;
  int adjacent_lane = -1;           // same-direction neighbour of the ego lane
  int oncoming_lane = -1;
  double right_roadside = -6.5;     // lateral offsets from the route
  double left_roadside = 6.5;
  // Vehicle paths through the junction, when the road has one.
  std::optional<Polyline> cross_left;
  std::optional<Polyline> cross_right;
  std::optional<Polyline> left_turn;  // oncoming traffic turning across the route
};

using RoadLibrary = std::map<RoadType, RoadTemplate>;

/// Builds one template from its parameter object (see data/roads.json).
RoadTemplate build_road_template(RoadType road, const Json& params);
RoadLibrary build_road_library(const Json& doc);
RoadLibrary load_road_library(const std::filesystem::path& path);

}  // namespace advscen
