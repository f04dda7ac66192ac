#pragma once

#include <string>
#include <vector>

#include "advscen/scenario_io.hpp"
#include "advscen/sim.hpp"

namespace advscen {

/// Per-rollout values, or suite means after aggregate_suite (where cr is the
/// collision fraction).
struct MetricsReport {
  double cr = 0.0;    // collision flag / rate
  double rr = 0.0;    // red-light runs
  double ss = 0.0;    // stop-sign violations
  double or_ = 0.0;   // mean distance beyond the road edge, m
  double rf = 0.0;    // route following, [0, 1]
  double comp = 0.0;  // route completion, [0, 1]
  double ts = 0.0;    // termination time, s
  double acc = 0.0;   // mean |accel|, m/s^2
  double yv = 0.0;    // mean |yaw rate|, rad/s
  double li = 0.0;    // lane invasions
  double os = 0.0;    // overall score, [0, 1]
  std::size_t rollouts = 1;
  bool operator==(const MetricsReport&) const = default;
};

struct ScoreWeights {
  double safety = 0.5;
  double function = 0.3;
  double etiquette = 0.2;
  double a_ref = 3.0;  // m/s^2
};

/// Throws DomainError on negative weights, weights not summing to 1 or a_ref <= 0.
double overall_score(const MetricsReport& r, const ScoreWeights& w = {});

/// Progress, lateral deviation and off-road distance are measured from the
/// logged poses against `route` and `context`; events come from the log.
/// Throws DomainError for a zero-length route.
MetricsReport compute_rollout_metrics(const RolloutLog& log, const Polyline& route, const SceneContext& context,
                                      const ScoreWeights& w = {});

/// Throws DomainError on an empty list.
MetricsReport aggregate_suite(const std::vector<MetricsReport>& reports);

inline constexpr const char* kMetricColumns[] = {"CR", "OS", "RR", "SS", "OR", "RF", "Comp", "TS", "ACC", "YV", "LI"};

Json to_json(const MetricsReport& r);
MetricsReport metrics_from_json(const Json& j, const std::string& where = "metrics");
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& label, const MetricsReport& r);
/// Fixed-width table, one row per (label, report).
std::string metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace advscen
