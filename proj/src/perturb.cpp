#include "advscen/perturb.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "advscen/errors.hpp"

namespace advscen {

namespace {

void check_shapes(const std::vector<Vec2>& seg, const std::vector<Vec2>& ego, const std::vector<Vec2>& adv) {
  if (seg.size() != ego.size() || seg.size() != adv.size()) {
    throw DimensionError("segment, ego and adversary windows must cover the same frames");
  }
  if (seg.size() < 3) throw DomainError("window shorter than 3 frames: second differences undefined");
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

constexpr int kMaxProjectionPasses = 50;
// Violated constraints are pulled slightly inside their limit so alternating
// passes settle in finitely many steps; kTol is the slack (meters) below
// which nothing counts as a violation or a move.
constexpr double kInset = 0.99;
constexpr double kAccelInset = 0.9;
constexpr int kMaxAccelSweeps = 500;
constexpr double kTol = 1e-9;

bool exceeds(double value, double limit) { return value > limit + kTol; }

Vec2 clamp_norm(const Vec2& v, double limit) {
  const double n = norm(v);
  return n > 0.0 ? v * (limit / n) : v;
}

constexpr double kHintWindow = 40.0;

// Arc length of each original point on the corridor, used to narrow the
// per-frame corridor search.
std::vector<double> corridor_hints(const std::vector<Vec2>& orig, const FeasibilityConstraints& c) {
  std::vector<double> s;
  if (c.corridor.empty()) return s;
  s.reserve(orig.size());
  for (const Vec2& q : orig) s.push_back(c.corridor.project(q).s);
  return s;
}

Polyline::Projection corridor_foot(const FeasibilityConstraints& c, const std::vector<double>& hints, std::size_t t,
                                   const Vec2& q) {
  if (t >= hints.size()) return c.corridor.project(q);
  return c.corridor.project(q, hints[t] - kHintWindow, hints[t] + kHintWindow);
}

// One pass of the four constraint groups; returns true if anything moved.
bool project_pass(std::vector<Vec2>& p, const std::vector<Vec2>& orig, const std::vector<double>& hints,
                  const FeasibilityConstraints& c, double dt) {
  bool changed = false;
  const std::size_t n = p.size();
  const double max_step = c.v_max * dt;
  for (std::size_t t = 1; t < n; ++t) {
    const Vec2 d = p[t] - p[t - 1];
    if (exceeds(norm(d), max_step)) {
      p[t] = p[t - 1] + clamp_norm(d, max_step * kInset);
      changed = true;
    }
  }
  // Minimum-norm correction of each violating second difference. Blend
  // frames follow frame b (or n-1-b) linearly, so a triple that reaches into
  // a blend ramp moves only its free frames, with the ramp's share folded
  // into the coefficient of the boundary frame.
  const double max_dv = c.a_max * dt * dt;
  const std::size_t b = c.blend_frames;
  const bool blended = b > 0 && 2 * b < n;
  const double ramp = blended ? static_cast<double>(b) / static_cast<double>(b + 1) : 0.0;
  for (int sweep = 0; sweep < kMaxAccelSweeps; ++sweep) {
    bool moved = false;
    for (std::size_t t = 1; t + 1 < n; ++t) {
      double k[3] = {1.0, -2.0, 1.0};
      if (blended) {
        if (t < b || t + b >= n) continue;
        if (t == b) k[0] = 0.0, k[1] += ramp;
        if (t + 1 + b == n) k[2] = 0.0, k[1] += ramp;
      }
      const Vec2 d = p[t + 1] - p[t] * 2.0 + p[t - 1];
      const double len = norm(d);
      if (exceeds(len, max_dv)) {
        const Vec2 delta = d * (-(len - max_dv * kAccelInset) / len / (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
        p[t - 1] += delta * k[0];
        p[t] += delta * k[1];
        p[t + 1] += delta * k[2];
        moved = true;
      }
    }
    if (!moved) break;
    changed = true;
  }
  if (!c.corridor.empty()) {
    for (std::size_t t = 0; t < n; ++t) {
      const Polyline::Projection pr = corridor_foot(c, hints, t, p[t]);
      if (exceeds(std::abs(pr.lateral), c.half_width)) {
        p[t] = pr.foot + left_normal(pr.tangent) * (sign(pr.lateral) * c.half_width * kInset);
        changed = true;
      }
    }
  }
  if (blended) {
    const Vec2 head = p[b] - orig[b];
    const Vec2 tail = p[n - 1 - b] - orig[n - 1 - b];
    for (std::size_t j = 0; j < b; ++j) {
      const double f = static_cast<double>(j + 1) / static_cast<double>(b + 1);
      const Vec2 h = orig[j] + head * f;
      const Vec2 e = orig[n - 1 - j] + tail * f;
      if (distance(p[j], h) > kTol) {
        p[j] = h;
        changed = true;
      }
      if (distance(p[n - 1 - j], e) > kTol) {
        p[n - 1 - j] = e;
        changed = true;
      }
    }
  }
  return changed;
}


// Projection that reports whether it reached a fixed point.
bool project_into(std::vector<Vec2>& p, const std::vector<Vec2>& orig, const std::vector<double>& hints,
                  const FeasibilityConstraints& c, double dt) {
  for (int pass = 0; pass < kMaxProjectionPasses; ++pass) {
    if (!project_pass(p, orig, hints, c, dt)) return true;
  }
  return false;
}

}  // namespace

std::vector<double> step_taper(std::size_t n, std::size_t blend_frames, std::size_t taper_frames) {
  std::vector<double> w(n, 1.0);
  if (taper_frames == 0 || n == 0) return w;
  const double r = static_cast<double>(taper_frames);
  for (std::size_t t = 0; t < n; ++t) {
    const double from_head = static_cast<double>(t) - static_cast<double>(blend_frames);
    const double from_tail = static_cast<double>(n - 1 - blend_frames) - static_cast<double>(t);
    const double u = std::clamp(std::min(from_head, from_tail) / r, 0.0, 1.0);
    w[t] = u * u * (3.0 - 2.0 * u);
  }
  return w;
}

LossTerms loss(const std::vector<Vec2>& seg, const std::vector<Vec2>& ego, const std::vector<Vec2>& adv,
               const LossWeights& w) {
  check_shapes(seg, ego, adv);
  const std::size_t n = seg.size();
  LossTerms r;
  for (std::size_t t = 0; t < n; ++t) {
    const Vec2 rel = seg[t] - ego[t];
    const Vec2 sight = adv[t] - ego[t];
    r.l_ego += norm(rel);
    r.l_occ += std::abs(cross(rel, sight)) / std::max(norm(sight), kOcclusionEps);
  }
  for (std::size_t t = 1; t + 1 < n; ++t) {
    const Vec2 d = seg[t + 1] - seg[t] * 2.0 + seg[t - 1];
    r.l_smooth += dot(d, d);
  }
  r.l_ego /= static_cast<double>(n);
  r.l_occ /= static_cast<double>(n);
  r.l_smooth /= static_cast<double>(n - 2);
  r.total = w.lambda1 * r.l_ego + w.lambda2 * r.l_occ + w.lambda3 * r.l_smooth;
  return r;
}

std::vector<Vec2> loss_gradient(const std::vector<Vec2>& seg, const std::vector<Vec2>& ego,
                                const std::vector<Vec2>& adv, const LossWeights& w) {
  check_shapes(seg, ego, adv);
  const std::size_t n = seg.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<Vec2> g(n);
  for (std::size_t t = 0; t < n; ++t) {
    const Vec2 rel = seg[t] - ego[t];
    const Vec2 sight = adv[t] - ego[t];
    const double d = norm(rel);
    if (d > 0.0) g[t] += rel * (w.lambda1 * inv_n / d);
    const double c = cross(rel, sight);
    g[t] += Vec2{sight.y, -sight.x} * (w.lambda2 * inv_n * sign(c) / std::max(norm(sight), kOcclusionEps));
  }
  std::vector<Vec2> d2(n);
  for (std::size_t t = 1; t + 1 < n; ++t) d2[t] = seg[t + 1] - seg[t] * 2.0 + seg[t - 1];
  const double k = 2.0 * w.lambda3 / static_cast<double>(n - 2);
  for (std::size_t j = 0; j < n; ++j) {
    Vec2 acc;
    if (j >= 2) acc += d2[j - 1];
    if (j >= 1 && j + 1 < n) acc -= d2[j] * 2.0;
    if (j + 2 < n) acc += d2[j + 1];
    g[j] += acc * k;
  }
  return g;
}

std::vector<Vec2> project_feasible(const std::vector<Vec2>& seg, const std::vector<Vec2>& original,
                                   const FeasibilityConstraints& c, double dt) {
  if (seg.size() != original.size()) throw DimensionError("project_feasible: segment and original differ in length");
  std::vector<Vec2> p = seg;
  project_into(p, original, corridor_hints(original, c), c, dt);
  return p;
}

OptimizeResult optimize_segment(const std::vector<Vec2>& seg, const std::vector<Vec2>& ego, const std::vector<Vec2>& adv,
                                const LossWeights& w, const FeasibilityConstraints& c, const OptimizerConfig& cfg,
                                double dt) {
  OptimizeResult res;
  res.segment = seg;
  res.trace.push_back(loss(seg, ego, adv, w));
  if (cfg.max_iters == 0) return res;

  const std::vector<double> hints = corridor_hints(seg, c);
  std::vector<Vec2> start = seg;
  if (project_into(start, seg, hints, c, dt) && start != seg) {
    res.segment = start;
    res.trace.front() = loss(start, ego, adv, w);
  }
  std::vector<Vec2>& cur = res.segment;
  double cur_loss = res.trace.front().total;
  const std::vector<double> taper = step_taper(cur.size(), c.blend_frames, cfg.taper_frames);
  for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
    std::vector<Vec2> g = loss_gradient(cur, ego, adv, w);
    for (std::size_t t = 0; t < g.size(); ++t) {
      g[t] *= taper[t];
      if (c.corridor.empty()) continue;
      // Drop the part of the step that would only be clamped back at the
      // corridor edge.
      const Polyline::Projection pr = corridor_foot(c, hints, t, cur[t]);
      if (std::abs(pr.lateral) < c.half_width * kInset) continue;
      const Vec2 out = left_normal(pr.tangent) * sign(pr.lateral);
      const double along = dot(g[t], out);
      if (along < 0.0) g[t] -= out * along;
    }
    double gmax = 0.0;
    for (const Vec2& v : g) gmax = std::max(gmax, norm(v));
    if (!(gmax > 0.0)) break;

    double step = cfg.step;
    bool accepted = false;
    for (int halving = 0; halving <= cfg.max_halvings; ++halving, step *= 0.5) {
      std::vector<Vec2> cand(cur.size());
      for (std::size_t t = 0; t < cur.size(); ++t) cand[t] = cur[t] - g[t] * (step / gmax);
      if (!project_into(cand, seg, hints, c, dt)) continue;
      const LossTerms lt = loss(cand, ego, adv, w);
      if (lt.total <= cur_loss) {
        cur = std::move(cand);
        cur_loss = lt.total;
        res.trace.push_back(lt);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const std::size_t m = res.trace.size() - 1;
    if (m >= cfg.patience) {
      const double before = res.trace[m - cfg.patience].total;
      const double gain = before - cur_loss;
      if (gain <= cfg.rel_tol * std::max(std::abs(before), 1e-12)) break;
    }
  }
  return res;
}

EvolveResult evolve_scenario(const MetaScenario& meta, const std::vector<Agent>& backgrounds, const EvolveConfig& cfg) {
  if (backgrounds.empty()) throw DomainError("evolve_scenario: no background vehicles to perturb");
  if (!meta.adversary) throw DomainError("evolve_scenario: meta-scenario has no adversary");
  const Trajectory& ego = meta.ego.trajectory;
  const Trajectory& adv = meta.adversary->trajectory;
  std::vector<Trajectory> bt;
  bt.reserve(backgrounds.size());
  for (const Agent& b : backgrounds) bt.push_back(b.trajectory);

  EvolveResult out;
  out.relevance = build_relevance(ego, adv, bt, cfg.gamma);
  out.collaborators = find_collaborators(out.relevance, cfg.k, cfg.ratio);
  const double dt = ego.dt();

  const std::size_t n = out.collaborators.size();
  std::vector<OptimizeResult> results(n);
  std::vector<std::vector<Vec2>> originals(n);
  auto work = [&](std::size_t j) {
    const Collaborator& col = out.collaborators[j];
    const Agent& b = backgrounds[col.index];
    const auto a = static_cast<long>(col.window.begin);
    const auto e = static_cast<long>(col.window.end);
    const auto& pts = b.trajectory.points();
    originals[j].assign(pts.begin() + a, pts.begin() + e);
    const std::vector<Vec2> ego_w(ego.points().begin() + a, ego.points().begin() + e);
    const std::vector<Vec2> adv_w(adv.points().begin() + a, adv.points().begin() + e);
    FeasibilityConstraints c;
    c.v_max = meta.context.limits.of(b.spec.cls);
    c.a_max = cfg.a_max;
    if (b.spec.lane >= 0 && static_cast<std::size_t>(b.spec.lane) < meta.context.lanes.size()) {
      const Lane& lane = meta.context.lanes[static_cast<std::size_t>(b.spec.lane)];
      c.corridor = lane.centerline;
      c.half_width = std::max(0.0, lane.width / 2.0 - b.spec.footprint.width / 2.0);
    }
    const std::size_t len = col.window.size();
    c.blend_frames = std::min(cfg.blend_frames, len >= 1 ? (len - 1) / 2 : 0);
    results[j] = optimize_segment(originals[j], ego_w, adv_w, cfg.weights, c, cfg.optimizer, dt);
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(n)));
  if (jobs <= 1) {
    for (std::size_t j = 0; j < n; ++j) work(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < n; j = next++) work(j);
      });
    }
    for (std::thread& th : pool) th.join();
  }

  out.scenario.meta = meta;
  out.scenario.backgrounds = backgrounds;
  for (std::size_t j = 0; j < n; ++j) {
    const Collaborator& col = out.collaborators[j];
    Agent& b = out.scenario.backgrounds[col.index];
    std::vector<Vec2> pts = b.trajectory.points();
    std::copy(results[j].segment.begin(), results[j].segment.end(), pts.begin() + static_cast<long>(col.window.begin));
    b.trajectory = Trajectory(b.trajectory.dt(), std::move(pts));
    PerturbationRecord rec;
    rec.agent = col.index;
    rec.keyframe = col.keyframe;
    rec.begin = col.window.begin;
    rec.end = col.window.end;
    rec.original = std::move(originals[j]);
    rec.optimized = results[j].segment;
    rec.relevance = col.score;
    out.scenario.perturbations.push_back(std::move(rec));
    out.traces.push_back(std::move(results[j].trace));
  }
  return out;
}

}  // namespace advscen
