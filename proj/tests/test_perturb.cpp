#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "advscen/errors.hpp"
#include "advscen/perturb.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace advscen;
using namespace advscen::testing;

namespace {

double max_rel_error(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    num = std::max(num, distance(a[t], b[t]));
    den = std::max(den, norm(b[t]));
  }
  return num / std::max(den, 1e-8);
}

std::vector<Vec2> random_points(Rng& rng, std::size_t n, double spread) {
  std::vector<Vec2> p;
  for (std::size_t t = 0; t < n; ++t) p.push_back({rng.uniform(-spread, spread), rng.uniform(-spread, spread)});
  return p;
}

FeasibilityConstraints loose() {
  FeasibilityConstraints c;
  c.v_max = 1e6;
  c.a_max = 1e9;
  c.blend_frames = 0;
  return c;
}

const MetaResult& flagship_meta() {
  static const MetaResult m = [] {
    RunConfig c;
    const Resources& r = shipped_resources();
    return generate_meta(c, r, r.prompts.front(), 0);
  }();
  return m;
}

}  // namespace

TEST_SUITE("perturb") {

TEST_CASE("loss: trivial cases") {
  const auto ego = line_points({0.0, 0.0}, {1.0, 0.0}, 5);
  const auto adv = line_points({10.0, 0.0}, {0.5, 0.0}, 5);
  const LossWeights w;
  CHECK(loss(ego, ego, adv, w).l_ego == 0.0);
  // Collinear with ego and adversary at every frame.
  CHECK(loss(line_points({3.0, 0.0}, {0.8, 0.0}, 5), ego, adv, w).l_occ == 0.0);
  CHECK(loss(line_points({3.0, 7.0}, {0.8, -0.3}, 5), ego, adv, w).l_smooth == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("loss: four-frame hand evaluation") {
  const std::vector<Vec2> seg = {{0.0, 1.0}, {1.0, 1.0}, {2.0, 2.0}, {3.0, 2.0}};
  const std::vector<Vec2> ego = {{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}, {3.0, 0.0}};
  const std::vector<Vec2> adv(4, Vec2{10.0, 0.0});
  // Distances 1, 1, 2, 2; the sight line is the x axis so the perpendicular
  // distances are the same; second differences (0,1) and (0,-1).
  const LossTerms l = loss(seg, ego, adv, LossWeights{});
  CHECK(l.l_ego == doctest::Approx(1.5));
  CHECK(l.l_occ == doctest::Approx(1.5));
  CHECK(l.l_smooth == doctest::Approx(1.0));
  CHECK(l.total == doctest::Approx(0.3 * 1.5 + 0.2 * 1.5 + 0.5 * 1.0));
}

TEST_CASE("loss: coincident ego and adversary stay finite") {
  const auto ego = line_points({0.0, 0.0}, {1.0, 0.0}, 4);
  const LossTerms l = loss(line_points({0.0, 2.0}, {1.0, 0.0}, 4), ego, ego, LossWeights{});
  CHECK(std::isfinite(l.total));
  CHECK(l.l_occ == 0.0);
}

TEST_CASE("loss: shape errors") {
  const auto a = line_points({0.0, 0.0}, {1.0, 0.0}, 4);
  const auto b = line_points({0.0, 0.0}, {1.0, 0.0}, 5);
  const auto s = line_points({0.0, 0.0}, {1.0, 0.0}, 2);
  CHECK_THROWS_AS(loss(a, b, a, LossWeights{}), DimensionError);
  CHECK_THROWS_AS(loss(s, s, s, LossWeights{}), DomainError);
  CHECK_THROWS_AS(loss_gradient(s, s, s, LossWeights{}), DomainError);
}

TEST_CASE("gradient matches central finite differences") {
  Rng rng(31);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 3 + rng.below(10);
    const auto seg = random_points(rng, n, 10.0);
    const auto ego = random_points(rng, n, 10.0);
    const auto adv = random_points(rng, n, 10.0);
    const LossWeights w{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
    CHECK(max_rel_error(loss_gradient(seg, ego, adv, w), fd_gradient(seg, ego, adv, w)) < 1e-5);
  }
}

TEST_CASE("gradient of a linear segment without proximity terms is zero") {
  const auto seg = line_points({1.0, 2.0}, {0.7, 0.1}, 8);
  const auto ego = line_points({0.0, 0.0}, {1.0, 0.0}, 8);
  for (const Vec2& g : loss_gradient(seg, ego, ego, LossWeights{0.0, 0.0, 0.5})) {
    CHECK(g.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(g.y == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("gradient of the proximity term is a scaled unit vector") {
  const std::vector<Vec2> seg = {{0.0, 5.0}, {3.0, 4.0}, {1.0, 1.0}, {8.0, 2.0}, {4.0, 0.0}};
  const std::vector<Vec2> ego = {{0.0, 0.0}, {0.0, 0.0}, {4.0, 5.0}, {2.0, 2.0}, {0.0, 0.0}};
  const auto g = loss_gradient(seg, ego, ego, LossWeights{0.3, 0.0, 0.0});
  // Frame 2: from ego (4,5) toward (1,1) is (-0.6, -0.8).
  CHECK(g[2].x == doctest::Approx(-0.6 * 0.3 / 5.0));
  CHECK(g[2].y == doctest::Approx(-0.8 * 0.3 / 5.0));
}

TEST_CASE("projection: feasible input is returned unchanged") {
  Rng rng(4);
  for (int k = 0; k < 20; ++k) {
    const ToyProblem p = toy_problem(rng, 30);
    CHECK(project_feasible(p.seg, p.seg, p.c, kDefaultDt) == p.seg);
  }
}

TEST_CASE("projection: a 60 m/s jump is clamped to about v_max dt") {
  FeasibilityConstraints c = loose();
  c.v_max = 20.0;
  std::vector<Vec2> seg = line_points({0.0, 0.0}, {1.0, 0.0}, 7);
  seg[4] = seg[3] + Vec2{6.0, 0.0};
  const auto out = project_feasible(seg, seg, c, 0.1);
  const double step = distance(out[4], out[3]);
  // Violations are pulled 1% inside the limit.
  CHECK(step <= 2.0 + 1e-9);
  CHECK(step >= 0.99 * 2.0 - 1e-9);
  CHECK(out[4].y == 0.0);
  for (std::size_t t = 1; t < out.size(); ++t) CHECK(distance(out[t], out[t - 1]) <= 2.0 + 1e-9);
}

TEST_CASE("projection: a point beyond the corridor edge moves back along the normal") {
  FeasibilityConstraints c = loose();
  c.corridor = Polyline({{0.0, 0.0}, {10.0, 10.0}});
  c.half_width = 1.0;
  const Vec2 n{-std::sqrt(0.5), std::sqrt(0.5)};
  const Vec2 foot{5.0, 5.0};
  std::vector<Vec2> seg = {{1.0, 1.0}, foot + n * 2.0, {9.0, 9.0}};
  const auto out = project_feasible(seg, seg, c, 0.1);
  const Vec2 moved = out[1] - foot;
  CHECK(std::abs(cross(moved, n)) < 1e-12);
  CHECK(dot(moved, n) <= 1.0 + 1e-9);
  CHECK(dot(moved, n) >= 0.99 - 1e-9);
  CHECK(out[0] == seg[0]);
  CHECK(out[2] == seg[2]);
}

TEST_CASE("projection: blend frames ramp toward the original boundary") {
  FeasibilityConstraints c = loose();
  c.blend_frames = 3;
  const auto orig = line_points({0.0, 0.0}, {1.0, 0.0}, 12);
  auto seg = orig;
  for (auto& p : seg) p.y += 1.0;
  const auto out = project_feasible(seg, orig, c, 0.1);
  CHECK(out[0].y == doctest::Approx(0.25));
  CHECK(out[1].y == doctest::Approx(0.5));
  CHECK(out[2].y == doctest::Approx(0.75));
  CHECK(out[3].y == doctest::Approx(1.0));
  CHECK(out[11].y == doctest::Approx(0.25));
  CHECK(satisfies_constraints(out, orig, c, 0.1));
}

TEST_CASE("projection output is a fixed point on random inputs") {
  Rng rng(8);
  for (int k = 0; k < 50; ++k) {
    ToyProblem p = toy_problem(rng, 40);
    auto noisy = p.seg;
    for (auto& q : noisy) q += Vec2{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    const auto once = project_feasible(noisy, p.seg, p.c, kDefaultDt);
    if (!satisfies_constraints(once, p.seg, p.c, kDefaultDt)) continue;  // pass budget exhausted
    CHECK(project_feasible(once, p.seg, p.c, kDefaultDt) == once);
  }
}

TEST_CASE("step taper") {
  const auto w = step_taper(50, 3, 10);
  CHECK(w[0] == 0.0);
  CHECK(w[3] == 0.0);
  CHECK(w[13] == 1.0);
  CHECK(w[25] == 1.0);
  CHECK(w[46] == 0.0);
  for (std::size_t t = 4; t <= 13; ++t) CHECK(w[t] >= w[t - 1]);
  CHECK(step_taper(5, 1, 0) == std::vector<double>(5, 1.0));
}

TEST_CASE("optimizer: zero iterations is a no-op") {
  Rng rng(1);
  const ToyProblem p = toy_problem(rng);
  OptimizerConfig cfg;
  cfg.max_iters = 0;
  const OptimizeResult r = optimize_segment(p.seg, p.ego, p.adv, p.w, p.c, cfg, kDefaultDt);
  CHECK(r.segment == p.seg);
  REQUIRE(r.trace.size() == 1);
  CHECK(r.trace[0].total == loss(p.seg, p.ego, p.adv, p.w).total);
}

TEST_CASE("optimizer: a parallel collaborator 8 m away moves closer") {
  const std::size_t n = 60;
  const auto ego = line_points({0.0, 0.0}, {1.0, 0.0}, n);
  const auto adv = line_points({80.0, -5.0}, {0.0, 0.0}, n);
  const auto seg = line_points({0.0, 8.0}, {1.0, 0.0}, n);
  FeasibilityConstraints c;
  c.corridor = Polyline({{-10.0, 8.0}, {100.0, 8.0}});
  c.half_width = 10.0;
  const OptimizeResult r = optimize_segment(seg, ego, adv, LossWeights{0.3, 0.0, 0.5}, c, OptimizerConfig{}, 0.1);
  CHECK(r.trace.back().l_ego < r.trace.front().l_ego);
  CHECK(r.trace.size() > 1);
}

TEST_CASE("optimizer: occlusion term pulls the collaborator toward the sight line") {
  const std::size_t n = 60;
  const auto ego = line_points({0.0, 0.0}, {1.0, 0.0}, n);
  const auto adv = line_points({40.0, 0.0}, {1.0, 0.0}, n);
  const auto seg = line_points({20.0, 3.0}, {1.0, 0.0}, n);
  FeasibilityConstraints c;
  c.corridor = Polyline({{-10.0, 3.0}, {200.0, 3.0}});
  c.half_width = 5.0;
  const OptimizeResult r = optimize_segment(seg, ego, adv, LossWeights{0.0, 0.5, 0.5}, c, OptimizerConfig{}, 0.1);
  CHECK(r.trace.back().l_occ < r.trace.front().l_occ);
}

TEST_CASE("optimizer contract on seeded toy scenes") {
  Rng rng(100);
  for (int k = 0; k < 30; ++k) {
    const ToyProblem p = toy_problem(rng);
    const OptimizeResult r = optimize_segment(p.seg, p.ego, p.adv, p.w, p.c, OptimizerConfig{}, kDefaultDt);
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i].total <= r.trace[i - 1].total);
    CHECK(project_feasible(r.segment, p.seg, p.c, kDefaultDt) == r.segment);
    CHECK(satisfies_constraints(r.segment, p.seg, p.c, kDefaultDt));
  }
}

TEST_CASE("optimizer is deterministic") {
  Rng rng(77);
  const ToyProblem p = toy_problem(rng);
  const auto a = optimize_segment(p.seg, p.ego, p.adv, p.w, p.c, OptimizerConfig{}, kDefaultDt);
  const auto b = optimize_segment(p.seg, p.ego, p.adv, p.w, p.c, OptimizerConfig{}, kDefaultDt);
  CHECK(a.segment == b.segment);
  CHECK(a.trace.size() == b.trace.size());
}

TEST_CASE("evolve: defaults give four records over 60% windows") {
  const MetaResult& m = flagship_meta();
  FlowConfig fc;
  fc.frames = m.meta.frames();
  const auto flow = generate_background_flow(m.meta.context, 10, 5, fc);
  const EvolveResult r = evolve_scenario(m.meta, flow, EvolveConfig{});
  const std::size_t T = m.meta.ego.trajectory.size();
  REQUIRE(r.scenario.perturbations.size() == 4);
  REQUIRE(r.scenario.backgrounds.size() == 10);
  std::vector<bool> touched(10, false);
  for (const PerturbationRecord& p : r.scenario.perturbations) {
    CHECK(p.end - p.begin == static_cast<std::size_t>(std::lround(0.6 * static_cast<double>(T))));
    CHECK(p.keyframe >= p.begin);
    CHECK(p.keyframe < p.end);
    touched[p.agent] = true;
  }
  CHECK(validate_scenario(r.scenario).empty());

  // Unselected backgrounds and frames outside every window are untouched.
  const auto baseline = r.scenario.baseline_backgrounds();
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(baseline[i].trajectory == flow[i].trajectory);
    if (!touched[i]) CHECK(r.scenario.backgrounds[i].trajectory == flow[i].trajectory);
  }
  for (const PerturbationRecord& p : r.scenario.perturbations) {
    const auto& now = r.scenario.backgrounds[p.agent].trajectory;
    for (std::size_t t = 0; t < T; ++t) {
      if (t < p.begin || t >= p.end) CHECK(now[t] == flow[p.agent].trajectory[t]);
    }
  }
}

TEST_CASE("evolve: k = 1 gives exactly one record and windows are feasible") {
  const MetaResult& m = flagship_meta();
  RunConfig c;
  c.evolve.k = 1;
  const EvolveResult r = evolve_meta(c, m.meta, m.id);
  REQUIRE(r.scenario.perturbations.size() == 1);
  const PerturbationRecord& p = r.scenario.perturbations[0];
  CHECK(r.traces.size() == 1);
  for (std::size_t i = 1; i < r.traces[0].size(); ++i) CHECK(r.traces[0][i].total <= r.traces[0][i - 1].total);
  CHECK(p.optimized != p.original);
  c.evolve.k = 0;
  CHECK_THROWS_AS(evolve_meta(c, m.meta, m.id), DomainError);
}

TEST_CASE("evolve: rejects empty backgrounds and missing adversary") {
  const MetaResult& m = flagship_meta();
  CHECK_THROWS_AS(evolve_scenario(m.meta, {}, EvolveConfig{}), DomainError);
  MetaScenario no_adv = m.meta;
  no_adv.adversary.reset();
  const auto flow = generate_background_flow(m.meta.context, 2, 1);
  CHECK_THROWS_AS(evolve_scenario(no_adv, flow, EvolveConfig{}), DomainError);
}

TEST_CASE("evolve: concurrent collaborators match the serial result") {
  const MetaResult& m = flagship_meta();
  RunConfig serial;
  RunConfig parallel;
  parallel.evolve.jobs = 4;
  const EvolveResult a = evolve_meta(serial, m.meta, m.id);
  const EvolveResult b = evolve_meta(parallel, m.meta, m.id);
  CHECK(a.scenario == b.scenario);
}

}  // TEST_SUITE
