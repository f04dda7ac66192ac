// Runs every primary acceptance criterion and prints one PASS/FAIL line each.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "advscen/instantiate.hpp"
#include "advscen/knowledge.hpp"
#include "advscen/scenic.hpp"
#include "advscen/semantics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace advscen;
using namespace advscen::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<Vec2> random_points(Rng& rng, std::size_t n, double spread) {
  std::vector<Vec2> p;
  for (std::size_t t = 0; t < n; ++t) p.push_back({rng.uniform(-spread, spread), rng.uniform(-spread, spread)});
  return p;
}

Outcome gradient_check() {
  Outcome o;
  Rng rng(1001);
  const auto t0 = Clock::now();
  double worst = 0.0;
  const int cases = 1000;
  for (int k = 0; k < cases; ++k) {
    const std::size_t n = 3 + rng.below(20);
    const auto seg = random_points(rng, n, 20.0);
    const auto ego = random_points(rng, n, 20.0);
    const auto adv = random_points(rng, n, 20.0);
    const LossWeights w{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
    const auto g = loss_gradient(seg, ego, adv, w);
    const auto fd = fd_gradient(seg, ego, adv, w);
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      num = std::max(num, distance(g[t], fd[t]));
      den = std::max(den, norm(fd[t]));
    }
    worst = std::max(worst, num / std::max(den, 1e-8));
  }
  const double secs = seconds_since(t0);
  o.detail = fmt("%d cases, max rel err %.2e, %.2f s", cases, worst, secs);
  o.require(worst < 1e-5, "relative error " + o.detail);
  o.require(secs < 10.0, "runtime " + o.detail);
  return o;
}

// A top-k choice agrees with reference scores up to `tol`: descending order,
// and nothing left out beats anything chosen by more than `tol`.
bool consistent_topk(const std::vector<std::size_t>& chosen, const std::vector<double>& ref, double tol = 1e-9) {
  std::vector<bool> in(ref.size(), false);
  for (std::size_t j = 0; j < chosen.size(); ++j) {
    in[chosen[j]] = true;
    if (j > 0 && ref[chosen[j]] > ref[chosen[j - 1]] + tol) return false;
  }
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (in[i]) continue;
    for (std::size_t j : chosen) {
      if (ref[i] > ref[j] + tol) return false;
    }
  }
  return true;
}

Outcome attention_oracle() {
  Outcome o;
  Rng rng(500);
  const int draws = 600;
  double worst = 0.0;
  for (int k = 0; k < draws && o.pass; ++k) {
    const std::size_t n = 1 + rng.below(5), T = 1 + rng.below(6);
    const ToyScene s = random_scene(rng, n, T);
    const RelevanceMatrix m = build_relevance(s.ego, s.adv, s.bg, 0.8);
    const Weights4 w = relevance_oracle(s.ego, s.adv, s.bg, 0.8);
    for (std::size_t q = 0; q < 2; ++q)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t u = 0; u < T; ++u) worst = std::max(worst, std::abs(m(q, t, i, u) - w[q][t][i][u]));
    const auto scores = aggregate_relevance(m);
    const auto expect = aggregate_oracle(w);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(scores[i] - expect[i]));
    for (std::size_t kk = 1; kk <= n; ++kk) {
      const auto chosen = select_collaborators(scores, kk);
      o.require(chosen == topk_oracle(scores, kk), fmt("top-%zu mismatch at draw %d", kk, k));
      o.require(consistent_topk(chosen, expect), fmt("top-%zu inconsistent with oracle scores at draw %d", kk, k));
    }
    for (std::size_t i = 0; i < n; ++i) {
      o.require(find_keyframe(m, i) == keyframe_oracle(w, i), fmt("keyframe mismatch at draw %d", k));
    }
  }
  o.require(worst <= 1e-9, fmt("max abs diff %.2e", worst));
  if (o.pass) o.detail = fmt("%d draws, max abs diff %.2e", draws, worst);
  return o;
}

Outcome causality_normalization() {
  Outcome o;
  Rng rng(77);
  double worst_sum = 0.0, worst_future = 0.0;
  for (int k = 0; k < 300; ++k) {
    const std::size_t n = 1 + rng.below(8), T = 1 + rng.below(30);
    const ToyScene s = random_scene(rng, n, T);
    const RelevanceMatrix m = build_relevance(s.ego, s.adv, s.bg, 0.8);
    for (std::size_t q = 0; q < 2; ++q)
      for (std::size_t t = 0; t < T; ++t) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t u = 0; u < T; ++u) {
            sum += m(q, t, i, u);
            if (u > t) worst_future = std::max(worst_future, std::abs(m(q, t, i, u)));
          }
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      }
  }
  o.require(worst_future == 0.0, fmt("future weight %.2e", worst_future));
  o.require(worst_sum <= 1e-9, fmt("slice sum off by %.2e", worst_sum));

  // Stationary agents: keys are identical across frames, so only the decay
  // term separates weights of different lags.
  const std::size_t T = 12;
  const Trajectory ego(0.1, std::vector<Vec2>(T, Vec2{0.0, 0.0}));
  const Trajectory adv(0.1, std::vector<Vec2>(T, Vec2{30.0, -4.0}));
  const std::vector<Trajectory> bg = {Trajectory(0.1, std::vector<Vec2>(T, Vec2{12.0, 3.5})),
                                      Trajectory(0.1, std::vector<Vec2>(T, Vec2{-8.0, 3.5}))};
  const RelevanceMatrix m = build_relevance(ego, adv, bg, 0.8);
  double worst_ratio = 0.0;
  for (std::size_t q = 0; q < 2; ++q)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t i = 0; i < bg.size(); ++i)
        for (std::size_t u = 0; u < t; ++u) {
          o.require(m(q, t, i, u) < m(q, t, i, u + 1), "decay not monotone in lag");
          worst_ratio = std::max(worst_ratio, std::abs(m(q, t, i, u) / m(q, t, i, u + 1) - 0.8));
        }
  o.require(worst_ratio <= 1e-9, fmt("lag ratio off gamma by %.2e", worst_ratio));
  if (o.pass) o.detail = fmt("max |sum-1| %.2e, future 0, lag ratio err %.2e", worst_sum, worst_ratio);
  return o;
}

Outcome optimizer_contract() {
  Outcome o;
  Rng rng(100);
  std::size_t steps = 0;
  for (int k = 0; k < 100; ++k) {
    const ToyProblem p = toy_problem(rng);
    const OptimizeResult r = optimize_segment(p.seg, p.ego, p.adv, p.w, p.c, OptimizerConfig{}, kDefaultDt);
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
      o.require(r.trace[i].total <= r.trace[i - 1].total, fmt("loss increased in scene %d", k));
    }
    steps += r.trace.size() - 1;
    o.require(project_feasible(r.segment, p.seg, p.c, kDefaultDt) == r.segment, fmt("not a fixed point in scene %d", k));
    o.require(satisfies_constraints(r.segment, p.seg, p.c, kDefaultDt), fmt("constraint violated in scene %d", k));
  }

  // Locality on evolved suite scenarios.
  const Resources& res = shipped_resources();
  RunConfig c;
  std::size_t records = 0;
  for (const BasePrompt& bp : res.prompts) {
    const MetaResult m = generate_meta(c, res, bp, 0);
    const AdvScenario s = evolve_meta(c, m.meta, m.id).scenario;
    const auto base = s.baseline_backgrounds();
    std::vector<std::vector<bool>> inside(s.backgrounds.size(), std::vector<bool>(s.meta.frames(), false));
    for (const PerturbationRecord& r : s.perturbations) {
      for (std::size_t t = r.begin; t < r.end; ++t) inside[r.agent][t] = true;
      ++records;
    }
    for (std::size_t i = 0; i < s.backgrounds.size(); ++i)
      for (std::size_t t = 0; t < s.backgrounds[i].trajectory.size(); ++t) {
        if (!inside[i][t]) {
          o.require(s.backgrounds[i].trajectory[t] == base[i].trajectory[t], "frame outside window changed in " + m.id);
        }
      }
  }
  if (o.pass) o.detail = fmt("100 toy scenes, %zu accepted steps, %zu evolved records local", steps, records);
  return o;
}

Outcome window_arithmetic() {
  Outcome o;
  o.require(extract_window(100, 50, 0.6) == FrameWindow{20, 80}, "T=100 t*=50");
  o.require(extract_window(100, 0, 0.6) == FrameWindow{0, 60}, "left clamp");
  o.require(extract_window(100, 99, 0.6) == FrameWindow{40, 100}, "right clamp");
  o.require(extract_window(100, 10, 0.6) == FrameWindow{0, 60}, "near-left clamp");
  o.require(extract_window(100, 95, 0.6) == FrameWindow{40, 100}, "near-right clamp");
  for (std::size_t T = 1; T <= 200; ++T)
    for (std::size_t k = 0; k < T; ++k) {
      const FrameWindow w = extract_window(T, k, 0.6);
      const auto len = static_cast<std::size_t>(std::max(1L, std::lround(0.6 * static_cast<double>(T))));
      o.require(w.size() == len && w.begin <= k && k < w.end && w.end <= T, fmt("T=%zu t*=%zu", T, k));
    }
  if (o.pass) o.detail = "[20,80), clamps [0,60) and [40,100), sweep T<=200";
  return o;
}

Outcome occlusion_suite() {
  Outcome o;
  const Resources& res = shipped_resources();
  RunConfig c;
  const auto t0 = Clock::now();
  const SuiteResult full = run_suite(c, res);
  const double secs = seconds_since(t0);
  c.evolve.weights.lambda2 = 0.0;
  const SuiteResult ablated = run_suite(c, res);
  const double benign = full.aggregate[0].cr, meta = full.aggregate[1].cr, adv = full.aggregate[2].cr;
  const double adv0 = ablated.aggregate[2].cr;
  o.detail = fmt("CR benign %.4f < meta %.4f < adversarial %.4f (gain %.4f), lambda2=0 %.4f, %zu scenarios, %.1f s",
                 benign, meta, adv, adv - meta, adv0, full.ids.size(), secs);
  o.require(full.failed.empty() && full.ids.size() == 80, "suite incomplete: " + o.detail);
  o.require(benign < meta && meta < adv, "ordering: " + o.detail);
  o.require(adv - meta >= 0.15, "gain: " + o.detail);
  o.require(secs < 300.0, "runtime: " + o.detail);
  o.require(adv0 < adv, "ablation: " + o.detail);
  return o;
}

Outcome stopping_oracle() {
  Outcome o;
  const EgoPolicyConfig p;
  const double stop = stopping_distance(p.cruise_speed, p.reaction_delay, p.max_brake);
  const AdvScenario visible = stopping_scene(0, false);
  const RolloutLog a = simulate_closed_loop(visible, p);
  const double gap_a = detection_gap(visible, a);
  const AdvScenario hidden = stopping_scene(27, true);
  const RolloutLog b = simulate_closed_loop(hidden, p);
  const double gap_b = detection_gap(hidden, b);
  o.detail = fmt("stopping distance %.2f m; visible gap %.2f m, %zu collisions; occluded gap %.2f m, %zu collisions",
                 stop, gap_a, a.collisions.size(), gap_b, b.collisions.size());
  o.require(gap_a > stop && a.collisions.empty(), "visible: " + o.detail);
  o.require(gap_b < stop && b.collisions.size() == 1 && b.termination == Termination::kCollision,
            "occluded: " + o.detail);
  return o;
}

Outcome determinism_roundtrip() {
  Outcome o;
  RunConfig c;
  c.seeds_per_prompt = 2;
  c.out_dir = scratch_dir("acceptance_a");
  cmd_generate(c);
  cmd_evolve(c);
  cmd_evaluate(c, Stage::kAdversarial);
  const std::uint64_t a = tree_digest(c.out_dir);
  c.out_dir = scratch_dir("acceptance_b");
  cmd_generate(c);
  cmd_evolve(c);
  cmd_evaluate(c, Stage::kAdversarial);
  const std::uint64_t b = tree_digest(c.out_dir);
  o.require(a == b, fmt("rerun digests differ: %016llx vs %016llx", static_cast<unsigned long long>(a),
                        static_cast<unsigned long long>(b)));

  Rng rng(2025);
  const auto dir = scratch_dir("acceptance_roundtrip");
  for (int k = 0; k < 1000 && o.pass; ++k) {
    const AdvScenario s = random_scenario(rng);
    save_scenario(s, dir / "s.json");
    const AdvScenario back = load_scenario(dir / "s.json");
    o.require(back == s && serialize_scenario(back) == read_text_file(dir / "s.json"), fmt("round trip %d", k));
  }
  if (o.pass) o.detail = fmt("rerun digest %016llx, 1000 save/load round trips", static_cast<unsigned long long>(a));
  return o;
}

Outcome meta_totality() {
  Outcome o;
  const Resources& r = shipped_resources();
  std::size_t typologies = 0, checked = 0;
  for (const KnowledgeEntry& e : r.kb) {
    if (e.source != KbSource::kCrash) continue;
    ++typologies;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      BackendConfig b;
      b.seed = seed;
      const MetaScenario m = instantiate_meta(parse_semantics(generate_semantics("", {e}, b), r.synonyms), r.roads);
      o.require(validate_scenario(m).empty(), fmt("invalid scenario for %s seed %llu", e.id.c_str(),
                                                  static_cast<unsigned long long>(seed)));
      o.require(!has_unfilled_slot(emit_scenic(m, r.scenic_template)), "unfilled slot for " + e.id);
      ++checked;
    }
  }
  o.require(typologies == 14, fmt("%zu typologies", typologies));
  if (o.pass) o.detail = fmt("%zu typologies x 10 seeds, %zu valid, 0 unfilled slots", typologies, checked);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient-correctness", gradient_check},
      {"attention-oracle-equivalence", attention_oracle},
      {"causality-and-normalization", causality_normalization},
      {"optimizer-contract", optimizer_contract},
      {"window-arithmetic", window_arithmetic},
      {"occlusion-mechanism", occlusion_suite},
      {"stopping-distance-oracle", stopping_oracle},
      {"determinism-and-round-trip", determinism_roundtrip},
      {"meta-generation-totality", meta_totality},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
