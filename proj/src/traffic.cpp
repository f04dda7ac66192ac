#include "advscen/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "advscen/errors.hpp"
#include "advscen/rng.hpp"

namespace advscen {

namespace {

// Spacing slot reserved per vehicle: the longest footprint plus the gap.
double slot_length(const FlowConfig& cfg) { return default_footprint(AgentClass::kTruck).length + cfg.min_gap; }

std::vector<std::size_t> background_lanes(const SceneContext& c) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < c.lanes.size(); ++i) {
    if (c.lanes[i].background) out.push_back(i);
  }
  return out;
}

double usable_span(const Lane& l, double slot) {
  const double span = l.spawn_hi - l.spawn_lo;
  return l.loop > 0.0 ? std::min(span, l.loop) - slot : span;
}

std::size_t lane_capacity(const Lane& l, double slot) {
  const double span = usable_span(l, slot);
  return span < 0.0 ? 0 : static_cast<std::size_t>(std::floor(span / slot)) + 1;
}

struct Vehicle {
  std::size_t agent = 0;
  double s = 0.0;
  double v = 0.0;
  double v_des = 0.0;
  double length = 0.0;
};

}  // namespace

std::size_t flow_capacity(const SceneContext& c, const FlowConfig& cfg) {
  std::size_t cap = 0;
  for (std::size_t i : background_lanes(c)) cap += lane_capacity(c.lanes[i], slot_length(cfg));
  return cap;
}

std::vector<Agent> generate_background_flow(const SceneContext& c, std::size_t n, std::uint64_t seed,
                                            const FlowConfig& cfg) {
  const double slot = slot_length(cfg);
  const std::size_t cap = flow_capacity(c, cfg);
  if (n > cap) {
    throw SpawnError("cannot spawn " + std::to_string(n) + " background vehicles: lane capacity at " +
                     std::to_string(static_cast<int>(cfg.min_gap)) + " m minimum gap is " + std::to_string(cap));
  }
  std::vector<Agent> agents(n);
  if (n == 0) return agents;
  const std::vector<std::size_t> lanes = background_lanes(c);
  Rng rng(seed, "background-flow");

  std::vector<std::size_t> count(c.lanes.size(), 0);
  std::vector<std::size_t> lane_of(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<std::size_t> open;
    for (std::size_t li : lanes) {
      if (count[li] < lane_capacity(c.lanes[li], slot)) open.push_back(li);
    }
    lane_of[k] = open[rng.below(open.size())];
    ++count[lane_of[k]];
  }

  // Per lane: sorted uniform offsets in the span left after reserving one slot
  // per vehicle, then shifted by the slots (keeps every gap >= min_gap).
  std::vector<Vehicle> veh(n);
  for (std::size_t li : lanes) {
    std::vector<std::size_t> members;
    for (std::size_t k = 0; k < n; ++k) {
      if (lane_of[k] == li) members.push_back(k);
    }
    if (members.empty()) continue;
    const Lane& lane = c.lanes[li];
    const double free = usable_span(lane, slot) - slot * static_cast<double>(members.size() - 1);
    std::vector<double> u(members.size());
    for (double& x : u) x = rng.uniform() * free;
    std::sort(u.begin(), u.end());
    for (std::size_t j = 0; j < members.size(); ++j) veh[members[j]].s = lane.spawn_lo + u[j] + slot * static_cast<double>(j);
  }
  for (std::size_t k = 0; k < n; ++k) {
    Agent& a = agents[k];
    char id[24];
    std::snprintf(id, sizeof id, "bg%02zu", k);
    a.spec.id = id;
    a.spec.kind = AgentKind::kBackground;
    a.spec.cls = rng.uniform() < cfg.truck_share ? AgentClass::kTruck : AgentClass::kCar;
    a.spec.footprint = default_footprint(a.spec.cls);
    a.spec.behavior = Behavior::kLaneFollow;
    a.spec.lane = static_cast<int>(lane_of[k]);
    veh[k].agent = k;
    veh[k].length = a.spec.footprint.length;
    veh[k].v_des = rng.uniform(cfg.speed_lo, cfg.speed_hi);
  }

  auto desired = [&](const Vehicle& v) {
    const Lane& lane = c.lanes[static_cast<std::size_t>(agents[v.agent].spec.lane)];
    const double kappa = lane.centerline.curvature_at(v.s);
    return kappa > 1e-6 ? std::min(v.v_des, std::sqrt(cfg.lateral_accel / kappa)) : v.v_des;
  };

  // Leader of each vehicle (index into veh, or -1) and the bumper gap to it.
  auto leaders = [&](std::vector<long>& lead, std::vector<double>& gap) {
    lead.assign(n, -1);
    gap.assign(n, INFINITY);
    for (std::size_t a = 0; a < n; ++a) {
      const Lane& lane = c.lanes[lane_of[a]];
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b || lane_of[b] != lane_of[a]) continue;
        double ds = veh[b].s - veh[a].s;
        if (lane.loop > 0.0) {
          ds = std::fmod(ds, lane.loop);
          if (ds < 0.0) ds += lane.loop;
        }
        if (ds < 0.0 || (ds == 0.0 && b < a)) continue;
        const double g = ds - 0.5 * (veh[a].length + veh[b].length);
        if (g < gap[a]) {
          gap[a] = g;
          lead[a] = static_cast<long>(b);
        }
      }
    }
  };

  std::vector<long> lead;
  std::vector<double> gap;
  leaders(lead, gap);
  for (std::size_t k = 0; k < n; ++k) {
    const double v0 = desired(veh[k]);
    veh[k].v = lead[k] < 0 ? v0 : std::clamp((gap[k] - cfg.min_gap) / cfg.headway, 0.0, v0);
  }

  std::vector<std::vector<Vec2>> pts(n);
  auto record = [&] {
    for (std::size_t k = 0; k < n; ++k) {
      const Lane& lane = c.lanes[lane_of[k]];
      pts[k].push_back(lane.centerline.point_at(veh[k].s));
    }
  };
  record();
  const double sqrt_ab = std::sqrt(cfg.max_accel * cfg.comfort_decel);
  for (std::size_t f = 1; f < cfg.frames; ++f) {
    leaders(lead, gap);
    std::vector<double> acc(n);
    for (std::size_t k = 0; k < n; ++k) {
      const Vehicle& v = veh[k];
      const double v0 = std::max(desired(v), 0.1);
      double a = cfg.max_accel * (1.0 - std::pow(v.v / v0, 4));
      if (lead[k] >= 0) {
        const double dv = v.v - veh[static_cast<std::size_t>(lead[k])].v;
        const double s_star = cfg.min_gap + std::max(0.0, v.v * cfg.headway + v.v * dv / (2.0 * sqrt_ab));
        const double g = std::max(gap[k], 0.1);
        a -= cfg.max_accel * (s_star / g) * (s_star / g);
      }
      acc[k] = std::clamp(a, -cfg.max_decel, cfg.max_accel);
    }
    for (std::size_t k = 0; k < n; ++k) {
      Vehicle& v = veh[k];
      const double dv = acc[k] * cfg.dt;
      const double vn = std::max(0.0, v.v + dv);
      const double ds = vn == 0.0 && v.v + dv < 0.0 ? v.v * v.v / (2.0 * -acc[k]) : 0.5 * (v.v + vn) * cfg.dt;
      v.s += std::max(0.0, ds);
      v.v = vn;
    }
    // Hold the minimum gap exactly, front to back within each lane.
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return veh[a].s > veh[b].s; });
    for (int sweep = 0; sweep < 2; ++sweep) {
      leaders(lead, gap);
      for (std::size_t k : order) {
        if (lead[k] >= 0 && gap[k] < cfg.min_gap) {
          veh[k].s -= cfg.min_gap - gap[k];
          veh[k].v = std::min(veh[k].v, veh[static_cast<std::size_t>(lead[k])].v);
          gap[k] = cfg.min_gap;
        }
      }
    }
    record();
  }
  for (std::size_t k = 0; k < n; ++k) {
    agents[k].trajectory = Trajectory(cfg.dt, std::move(pts[k]));
    const auto& p = agents[k].trajectory.points();
    const Lane& lane = c.lanes[lane_of[k]];
    const Vec2 tan = lane.centerline.tangent_at(lane.centerline.project(p.front()).s);
    agents[k].spec.initial_pose = {p.front(), std::atan2(tan.y, tan.x)};
  }
  return agents;
}

}  // namespace advscen
