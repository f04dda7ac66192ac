#pragma once

#include <cstddef>
#include <vector>

#include "advscen/scenario.hpp"
#include "advscen/scenario_io.hpp"

namespace advscen {

/// Frame-wise attention weights from the (ego, adversary) queries to the
/// background keys, indexed [q][t][i][s].
class RelevanceMatrix {
 public:
  RelevanceMatrix() = default;
  RelevanceMatrix(std::size_t backgrounds, std::size_t frames, double gamma)
      : n_(backgrounds), frames_(frames), gamma_(gamma), w_(2 * frames * backgrounds * frames, 0.0) {}

  std::size_t backgrounds() const { return n_; }
  std::size_t frames() const { return frames_; }
  double gamma() const { return gamma_; }
  static constexpr double kDim = 2.0;

  double operator()(std::size_t q, std::size_t t, std::size_t i, std::size_t s) const { return w_[index(q, t, i, s)]; }
  double& at(std::size_t q, std::size_t t, std::size_t i, std::size_t s) { return w_[index(q, t, i, s)]; }

 private:
  std::size_t index(std::size_t q, std::size_t t, std::size_t i, std::size_t s) const {
    return ((q * frames_ + t) * n_ + i) * frames_ + s;
  }
  std::size_t n_ = 0;
  std::size_t frames_ = 0;
  double gamma_ = 0.8;
  std::vector<double> w_;
};

/// logit = (q_t . k_s) / sqrt(2) + mask(t, s) + (t - s) ln(gamma) on positions
/// centered at the per-frame centroid of all agents, normalized with
/// a softmax over every (i, s <= t) for each query agent and frame.
RelevanceMatrix build_relevance(const Trajectory& ego, const Trajectory& adv, const std::vector<Trajectory>& backgrounds,
                                double gamma);

/// score_i = sum over q, t, s of the weights.
std::vector<double> aggregate_relevance(const RelevanceMatrix& m);

/// Indices of the k largest scores, descending, ties to the lower index.
std::vector<std::size_t> select_collaborators(const std::vector<double>& scores, std::size_t k);

/// Key frame with the largest column sum for background i; earliest on ties.
std::size_t find_keyframe(const RelevanceMatrix& m, std::size_t i);

struct FrameWindow {
  std::size_t begin = 0;  // [begin, end)
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool operator==(const FrameWindow&) const = default;
};

/// Window of round(ratio * T) frames centered on the keyframe, clamped to [0, T).
FrameWindow extract_window(std::size_t frames, std::size_t keyframe, double ratio);

struct Collaborator {
  std::size_t index = 0;
  std::size_t keyframe = 0;
  FrameWindow window;
  double score = 0.0;
};

/// The whole collaborator search: relevance, Top-k, keyframes and windows.
std::vector<Collaborator> find_collaborators(const RelevanceMatrix& m, std::size_t k, double ratio);

/// Structured dump of per-vehicle scores, collaborators and, optionally, the
/// full weight tensor.
Json relevance_report(const RelevanceMatrix& m, const std::vector<Collaborator>& chosen, bool include_tensor);

}  // namespace advscen
