#include "advscen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "advscen/errors.hpp"

namespace advscen {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::vector<double> fields(const MetricsReport& r) {
  return {r.cr, r.os, r.rr, r.ss, r.or_, r.rf, r.comp, r.ts, r.acc, r.yv, r.li};
}

}  // namespace

double overall_score(const MetricsReport& r, const ScoreWeights& w) {
  if (w.safety < 0.0 || w.function < 0.0 || w.etiquette < 0.0) throw DomainError("score weights must be non-negative");
  if (std::abs(w.safety + w.function + w.etiquette - 1.0) > 1e-9) throw DomainError("score weights must sum to 1");
  if (!(w.a_ref > 0.0)) throw DomainError("a_ref must be positive");
  const double cr_adj = clamp01(r.cr + 0.1 * (r.rr + r.ss) + 0.05 * std::min(r.or_, 1.0));
  return w.safety * (1.0 - cr_adj) + w.function * (r.rf * r.comp) + w.etiquette * (1.0 - clamp01(r.acc / w.a_ref));
}

MetricsReport compute_rollout_metrics(const RolloutLog& log, const Polyline& route, const SceneContext& context,
                                      const ScoreWeights& w) {
  const double len = route.length();
  if (!(len > 0.0)) throw DomainError("route length must be positive");
  MetricsReport r;
  r.cr = log.collisions.empty() ? 0.0 : 1.0;
  r.rr = static_cast<double>(log.count(RuleEvent::kRedLight));
  r.ss = static_cast<double>(log.count(RuleEvent::kStopSign));
  r.li = static_cast<double>(log.count(RuleEvent::kLaneInvasion));
  const std::size_t n = log.frames.size();
  if (n > 0) {
    const double half = 0.5 * context.route_lane_width();
    double lat = 0.0, off = 0.0, acc = 0.0, yv = 0.0, progress = 0.0;
    for (const EgoFrame& f : log.frames) {
      const auto pr = route.project(f.pose.position);
      progress = std::max(progress, std::clamp(pr.s, 0.0, len));
      lat += std::abs(pr.lateral);
      double edge = INFINITY;
      for (const Lane& l : context.lanes) {
        edge = std::min(edge, std::abs(l.centerline.project(f.pose.position).lateral) - 0.5 * l.width);
      }
      off += context.lanes.empty() ? 0.0 : std::max(0.0, edge);
      acc += std::abs(f.accel);
      yv += std::abs(f.yaw_rate);
    }
    const double dn = static_cast<double>(n);
    r.rf = 1.0 - clamp01(lat / dn / half);
    r.or_ = off / dn;
    r.acc = acc / dn;
    r.yv = yv / dn;
    r.comp = log.termination == Termination::kGoal ? 1.0 : clamp01(progress / len);
    r.ts = log.dt * static_cast<double>(n - 1);
  }
  r.os = overall_score(r, w);
  return r;
}

MetricsReport aggregate_suite(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw DomainError("cannot aggregate an empty suite");
  // Sum in a canonical order so the result does not depend on input order.
  std::vector<std::vector<double>> rows;
  std::size_t total = 0;
  for (const MetricsReport& r : reports) {
    rows.push_back(fields(r));
    rows.back().push_back(static_cast<double>(r.rollouts));
    total += r.rollouts;
  }
  std::sort(rows.begin(), rows.end());
  std::vector<double> sum(rows.front().size(), 0.0);
  for (const auto& row : rows) {
    const double wgt = row.back();
    for (std::size_t i = 0; i + 1 < row.size(); ++i) sum[i] += wgt * row[i];
  }
  const double dn = static_cast<double>(total);
  MetricsReport out;
  out.cr = sum[0] / dn;
  out.os = sum[1] / dn;
  out.rr = sum[2] / dn;
  out.ss = sum[3] / dn;
  out.or_ = sum[4] / dn;
  out.rf = sum[5] / dn;
  out.comp = sum[6] / dn;
  out.ts = sum[7] / dn;
  out.acc = sum[8] / dn;
  out.yv = sum[9] / dn;
  out.li = sum[10] / dn;
  out.rollouts = total;
  return out;
}

Json to_json(const MetricsReport& r) {
  Json j;
  const auto v = fields(r);
  for (std::size_t i = 0; i < v.size(); ++i) j[kMetricColumns[i]] = v[i];
  j["rollouts"] = r.rollouts;
  return j;
}

MetricsReport metrics_from_json(const Json& j, const std::string& where) {
  std::vector<double> v;
  for (const char* c : kMetricColumns) v.push_back(require_number(j, c, where));
  MetricsReport r{v[0], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[1], 1};
  r.rollouts = static_cast<std::size_t>(require_number(j, "rollouts", where));
  return r;
}

std::string metrics_csv_header() {
  std::string h = "label";
  for (const char* c : kMetricColumns) h += std::string(",") + c;
  return h + ",rollouts\n";
}

std::string metrics_csv_row(const std::string& label, const MetricsReport& r) {
  std::string row = label;
  char buf[32];
  for (double v : fields(r)) {
    std::snprintf(buf, sizeof buf, ",%.6f", v);
    row += buf;
  }
  return row + "," + std::to_string(r.rollouts) + "\n";
}

std::string metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::size_t w = 8;
  for (const auto& [label, r] : rows) w = std::max(w, label.size() + 2);
  char buf[64];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(w), "suite");
  out += buf;
  for (const char* c : kMetricColumns) {
    std::snprintf(buf, sizeof buf, "%8s", c);
    out += buf;
  }
  out += "\n";
  for (const auto& [label, r] : rows) {
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(w), label.c_str());
    out += buf;
    for (double v : fields(r)) {
      std::snprintf(buf, sizeof buf, "%8.3f", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace advscen
