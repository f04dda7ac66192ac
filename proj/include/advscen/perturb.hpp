#pragma once

#include <cstddef>
#include <vector>

#include "advscen/relevance.hpp"
#include "advscen/scenario.hpp"

namespace advscen {

struct LossWeights {
  double lambda1 = 0.3;  // proximity to the ego
  double lambda2 = 0.2;  // alignment with the ego-adversary sight line
  double lambda3 = 0.5;  // smoothness
};

struct LossTerms {
  double total = 0.0;
  double l_ego = 0.0;
  double l_occ = 0.0;
  double l_smooth = 0.0;
};

inline constexpr double kOcclusionEps = 1e-6;

/// Per-frame means of the three terms; l_smooth averages the W-2 second
/// differences. Throws DimensionError on length mismatch and DomainError when
/// the window is shorter than 3 frames.
LossTerms loss(const std::vector<Vec2>& seg, const std::vector<Vec2>& ego, const std::vector<Vec2>& adv,
               const LossWeights& w);

/// Analytic gradient of the total loss with respect to every segment point.
std::vector<Vec2> loss_gradient(const std::vector<Vec2>& seg, const std::vector<Vec2>& ego,
                                const std::vector<Vec2>& adv, const LossWeights& w);

struct FeasibilityConstraints {
  double v_max = 20.0;
  double a_max = 4.0;
  Polyline corridor;        // lane centerline
  double half_width = 0.8;  // allowed lateral offset from the centerline
  std::size_t blend_frames = 3;
};

/// Enforces, in order: per-frame displacement <= v_max dt, per-frame velocity
/// change <= a_max dt, lateral offset <= half_width, and linear blending of
/// the first/last blend_frames toward the original segment. Violating points
/// are pulled slightly inside each limit (99% for speed and corridor, 90% for
/// acceleration) and the passes repeat until every constraint holds to 1e-9,
/// so feasible input comes back unchanged and the output is a fixed point.
std::vector<Vec2> project_feasible(const std::vector<Vec2>& seg, const std::vector<Vec2>& original,
                                   const FeasibilityConstraints& c, double dt);

struct OptimizerConfig {
  double step = 0.05;
  std::size_t max_iters = 200;
  double rel_tol = 1e-4;
  std::size_t patience = 10;
  int max_halvings = 5;
  // Steps fade in over this many frames from each blend boundary, so the
  // window ends stay within the acceleration limit of the blend ramp.
  std::size_t taper_frames = 20;
};

/// Smoothstep weights: 0 on the blend frames, rising to 1 over taper_frames.
std::vector<double> step_taper(std::size_t n, std::size_t blend_frames, std::size_t taper_frames);

struct OptimizeResult {
  std::vector<Vec2> segment;
  std::vector<LossTerms> trace;  // initial loss then one entry per accepted step
};

/// Normalized-gradient projected descent with step rejection and halving.
/// The gradient is weighted by step_taper before normalization.
OptimizeResult optimize_segment(const std::vector<Vec2>& seg, const std::vector<Vec2>& ego, const std::vector<Vec2>& adv,
                                const LossWeights& w, const FeasibilityConstraints& c, const OptimizerConfig& cfg,
                                double dt);

struct EvolveConfig {
  std::size_t k = 4;
  double ratio = 0.6;
  double gamma = 0.8;
  LossWeights weights;
  double a_max = 4.0;
  std::size_t blend_frames = 3;
  OptimizerConfig optimizer;
  unsigned jobs = 1;  // collaborators optimized concurrently
};

struct EvolveResult {
  AdvScenario scenario;
  std::vector<std::vector<LossTerms>> traces;  // one per perturbation record
  RelevanceMatrix relevance;
  std::vector<Collaborator> collaborators;
};

/// Collaborator search on the frozen ego/adversary trajectories, then one
/// windowed optimization per collaborator spliced into its trajectory.
EvolveResult evolve_scenario(const MetaScenario& meta, const std::vector<Agent>& backgrounds, const EvolveConfig& cfg);

}  // namespace advscen
