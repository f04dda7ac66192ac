#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "advscen/errors.hpp"
#include "advscen/metrics.hpp"
#include "support.hpp"

using namespace advscen;
using namespace advscen::testing;

namespace {

// Logged frames for an ego on the x axis with the given per-frame accel.
RolloutLog straight_log(const std::vector<double>& accel, double v0, Termination end) {
  RolloutLog log;
  double x = 0.0, v = v0;
  for (double a : accel) {
    EgoFrame f;
    f.pose = {{x, 0.0}, 0.0};
    f.speed = v;
    f.accel = a;
    log.frames.push_back(f);
    x += v * log.dt + 0.5 * a * log.dt * log.dt;
    v += a * log.dt;
  }
  log.termination = end;
  return log;
}

MetricsReport random_report(Rng& rng) {
  MetricsReport r;
  r.cr = static_cast<double>(rng.below(2));
  r.rr = static_cast<double>(rng.below(3));
  r.ss = static_cast<double>(rng.below(3));
  r.or_ = rng.uniform(0.0, 2.0);
  r.rf = rng.uniform(0.0, 1.0);
  r.comp = rng.uniform(0.0, 1.0);
  r.ts = rng.uniform(0.0, 20.0);
  r.acc = rng.uniform(0.0, 5.0);
  r.yv = rng.uniform(0.0, 1.0);
  r.li = static_cast<double>(rng.below(4));
  r.os = overall_score(r);
  return r;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("goal-reaching rollout completes the route") {
  AdvScenario s;
  s.meta = straight_meta(160, 10.0);
  const RolloutLog log = simulate_closed_loop(s);
  REQUIRE(log.termination == Termination::kGoal);
  const MetricsReport m = compute_rollout_metrics(log, s.meta.context.route, s.meta.context);
  CHECK(m.comp == 1.0);
  CHECK(m.cr == 0.0);
  CHECK(m.rf == doctest::Approx(1.0));
  CHECK(m.or_ == 0.0);
  CHECK(m.ts == doctest::Approx(log.dt * static_cast<double>(log.frames.size() - 1)));
}

TEST_CASE("stationary ego") {
  const SceneContext c = straight_context();
  const RolloutLog log = straight_log(std::vector<double>(50, 0.0), 0.0, Termination::kTimeout);
  const MetricsReport m = compute_rollout_metrics(log, c.route, c);
  CHECK(m.acc == 0.0);
  CHECK(m.yv == 0.0);
  CHECK(m.comp == 0.0);
}

TEST_CASE("synthetic log: 2 m/s^2 for 5 s then cruise for 5 s") {
  const SceneContext c = straight_context();
  std::vector<double> a(100, 0.0);
  std::fill(a.begin(), a.begin() + 50, 2.0);
  const MetricsReport m = compute_rollout_metrics(straight_log(a, 0.0, Termination::kTimeout), c.route, c);
  CHECK(m.acc == doctest::Approx(1.0));
  // Traveled 25 m accelerating then 10 m/s for 4.9 s of logged frames.
  CHECK(m.comp == doctest::Approx((25.0 + 49.0) / c.route.length()).epsilon(1e-9));
}

TEST_CASE("off-road and route-following from poses") {
  const SceneContext c = straight_context();
  RolloutLog log = straight_log(std::vector<double>(10, 0.0), 5.0, Termination::kTimeout);
  // Lanes cover y in [-1.75, 5.25]; y = 6.25 is 1 m beyond the left edge and
  // 6.25 / 1.75 lane half-widths from the route.
  for (EgoFrame& f : log.frames) f.pose.position.y = 6.25;
  const MetricsReport m = compute_rollout_metrics(log, c.route, c);
  CHECK(m.or_ == doctest::Approx(1.0));
  CHECK(m.rf == 0.0);
  for (EgoFrame& f : log.frames) f.pose.position.y = 0.875;
  CHECK(compute_rollout_metrics(log, c.route, c).rf == doctest::Approx(0.5));
}

TEST_CASE("event counts come from the log") {
  const SceneContext c = straight_context();
  RolloutLog log = straight_log(std::vector<double>(10, 0.0), 5.0, Termination::kCollision);
  log.collisions.push_back({9, "adv", {}});
  log.events = {{RuleEvent::kRedLight, 2}, {RuleEvent::kStopSign, 3}, {RuleEvent::kStopSign, 5},
                {RuleEvent::kLaneInvasion, 6}};
  const MetricsReport m = compute_rollout_metrics(log, c.route, c);
  CHECK(m.cr == 1.0);
  CHECK(m.rr == 1.0);
  CHECK(m.ss == 2.0);
  CHECK(m.li == 1.0);
}

TEST_CASE("zero-length route is rejected") {
  const SceneContext c = straight_context();
  CHECK_THROWS_AS(compute_rollout_metrics(RolloutLog{}, Polyline({{1.0, 1.0}}), c), DomainError);
}

TEST_CASE("aggregate_suite arithmetic") {
  std::vector<MetricsReport> ten(10);
  CHECK(aggregate_suite(ten).cr == 0.0);
  std::vector<MetricsReport> hundred(100);
  for (std::size_t i = 0; i < 82; ++i) hundred[i].cr = 1.0;
  CHECK(aggregate_suite(hundred).cr == doctest::Approx(0.82));
  CHECK(aggregate_suite(hundred).rollouts == 100);
  MetricsReport a, b;
  a.comp = 0.4;
  b.comp = 0.6;
  CHECK(aggregate_suite({a, b}).comp == doctest::Approx(0.5));
  CHECK_THROWS_AS(aggregate_suite({}), DomainError);
}

TEST_CASE("aggregate_suite weights pre-aggregated reports by rollout count") {
  MetricsReport a, b;
  a.cr = 1.0;
  a.rollouts = 3;
  b.cr = 0.0;
  b.rollouts = 1;
  CHECK(aggregate_suite({a, b}).cr == doctest::Approx(0.75));
}

TEST_CASE("aggregate_suite is permutation invariant") {
  Rng rng(4);
  for (int k = 0; k < 50; ++k) {
    std::vector<MetricsReport> rs;
    const std::size_t n = 1 + rng.below(20);
    for (std::size_t i = 0; i < n; ++i) rs.push_back(random_report(rng));
    const MetricsReport before = aggregate_suite(rs);
    for (std::size_t i = n; i > 1; --i) std::swap(rs[i - 1], rs[rng.below(i)]);
    CHECK(aggregate_suite(rs) == before);
  }
}

TEST_CASE("overall score examples") {
  MetricsReport perfect;
  perfect.rf = perfect.comp = 1.0;
  CHECK(overall_score(perfect) == doctest::Approx(1.0));

  MetricsReport crash;
  crash.cr = 1.0;
  crash.rf = 1.0;
  CHECK(overall_score(crash) <= 0.2 + 1e-12);

  MetricsReport mid;
  mid.cr = 0.5;
  mid.rf = 0.8;
  mid.comp = 0.5;
  mid.acc = 1.5;
  CHECK(overall_score(mid) == doctest::Approx(0.5 * 0.5 + 0.3 * 0.4 + 0.2 * 0.5));
  CHECK(overall_score(mid) == doctest::Approx(0.47));
}

TEST_CASE("overall score rejects bad weights") {
  MetricsReport r;
  CHECK_THROWS_AS(overall_score(r, {0.6, 0.3, 0.2, 3.0}), DomainError);
  CHECK_THROWS_AS(overall_score(r, {1.2, -0.2, 0.0, 3.0}), DomainError);
  CHECK_THROWS_AS(overall_score(r, {0.5, 0.3, 0.2, 0.0}), DomainError);
}

TEST_CASE("overall score monotonicity under randomized pairwise changes") {
  Rng rng(19);
  for (int k = 0; k < 2000; ++k) {
    const MetricsReport base = random_report(rng);
    const double before = overall_score(base);
    const double d = rng.uniform(0.0, 1.0);
    MetricsReport r = base;
    switch (rng.below(7)) {
      case 0: r.cr = std::min(1.0, r.cr + d); CHECK(overall_score(r) <= before + 1e-12); break;
      case 1: r.rr += d; CHECK(overall_score(r) <= before + 1e-12); break;
      case 2: r.ss += d; CHECK(overall_score(r) <= before + 1e-12); break;
      case 3: r.or_ += d; CHECK(overall_score(r) <= before + 1e-12); break;
      case 4: r.acc += d; CHECK(overall_score(r) <= before + 1e-12); break;
      case 5: r.rf = std::min(1.0, r.rf + d); CHECK(overall_score(r) >= before - 1e-12); break;
      default: r.comp = std::min(1.0, r.comp + d); CHECK(overall_score(r) >= before - 1e-12); break;
    }
  }
}

TEST_CASE("report fields stay in range on simulated rollouts") {
  const Resources& res = shipped_resources();
  RunConfig c;
  for (std::size_t i = 0; i < res.prompts.size(); ++i) {
    const MetaResult m = generate_meta(c, res, res.prompts[i], 1);
    const AdvScenario s = evolve_meta(c, m.meta, m.id).scenario;
    for (Stage st : {Stage::kBenign, Stage::kMeta, Stage::kAdversarial}) {
      const MetricsReport r = evaluate_scenario(c, stage_view(s, st)).metrics;
      for (double v : {r.cr, r.comp, r.rf, r.os}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      for (double v : {r.rr, r.ss, r.or_, r.ts, r.acc, r.yv, r.li}) CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("JSON and CSV round trip") {
  Rng rng(3);
  const MetricsReport r = random_report(rng);
  CHECK(metrics_from_json(to_json(r)) == r);
  CHECK(metrics_csv_header() == "label,CR,OS,RR,SS,OR,RF,Comp,TS,ACC,YV,LI,rollouts\n");
  const std::string row = metrics_csv_row("x", r);
  CHECK(std::count(row.begin(), row.end(), ',') == 12);
  const std::string table = metrics_table({{"benign", r}, {"adversarial", r}});
  CHECK(table.find("adversarial") != std::string::npos);
  CHECK(table.find("Comp") != std::string::npos);
}

}  // TEST_SUITE
