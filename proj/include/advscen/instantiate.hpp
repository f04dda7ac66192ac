#pragma once

#include "advscen/roads.hpp"
#include "advscen/semantics.hpp"

namespace advscen {

struct InstantiateOptions {
  double trigger_distance = 15.0;   // sudden-emergence: nominal ego distance to the conflict point
  double cut_in_gap = 10.0;         // bumper gap at which a cut-in starts
  double cut_in_duration = 1.5;     // seconds for the lateral move
  double hard_brake_time = 2.0;     // seconds before the lead vehicle brakes
  double hard_brake_decel = 8.0;
  double dt = kDefaultDt;
};

/// Positions at constant speed along the route, holding at its end.
Trajectory nominal_ego_trajectory(const Polyline& route, double speed, std::size_t frames, double dt);

/// Places the adversary on the road template for `s.road` and scripts its
/// trajectory from the behavior. Throws InstantiationError when the
/// placement/behavior combination has no realization on that road.
MetaScenario instantiate_meta(const StructuredTuple& s, const RoadLibrary& lib, const InstantiateOptions& opt = {});

}  // namespace advscen
