#include "advscen/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "advscen/errors.hpp"

namespace advscen {

RelevanceMatrix build_relevance(const Trajectory& ego, const Trajectory& adv, const std::vector<Trajectory>& backgrounds,
                                double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("build_relevance: gamma must lie in (0, 1)");
  const std::size_t T = ego.size();
  if (adv.size() != T || adv.dt() != ego.dt()) throw DimensionError("build_relevance: adversary trajectory shape differs from ego");
  for (const Trajectory& b : backgrounds) {
    if (b.size() != T || b.dt() != ego.dt()) throw DimensionError("build_relevance: background trajectory shape differs from ego");
  }
  const std::size_t n = backgrounds.size();
  RelevanceMatrix m(n, T, gamma);
  if (n == 0 || T == 0) return m;

  // Per-frame centroid of every agent: translation invariant and causal.
  std::vector<Vec2> centroid(T);
  for (std::size_t t = 0; t < T; ++t) {
    Vec2 c = ego[t] + adv[t];
    for (const Trajectory& b : backgrounds) c += b[t];
    centroid[t] = c / static_cast<double>(n + 2);
  }

  const double scale = 1.0 / std::sqrt(RelevanceMatrix::kDim);
  const double log_gamma = std::log(gamma);
  std::vector<double> logits(n * T);
  for (std::size_t q = 0; q < 2; ++q) {
    const Trajectory& query = q == 0 ? ego : adv;
    for (std::size_t t = 0; t < T; ++t) {
      const Vec2 qt = query[t] - centroid[t];
      double peak = -INFINITY;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t s = 0; s <= t; ++s) {
          const double l = dot(qt, backgrounds[i][s] - centroid[s]) * scale + static_cast<double>(t - s) * log_gamma;
          logits[i * T + s] = l;
          peak = std::max(peak, l);
        }
      }
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t s = 0; s <= t; ++s) {
          const double e = std::exp(logits[i * T + s] - peak);
          m.at(q, t, i, s) = e;
          total += e;
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t s = 0; s <= t; ++s) m.at(q, t, i, s) /= total;
      }
    }
  }
  return m;
}

std::vector<double> aggregate_relevance(const RelevanceMatrix& m) {
  std::vector<double> scores(m.backgrounds(), 0.0);
  for (std::size_t q = 0; q < 2; ++q) {
    for (std::size_t t = 0; t < m.frames(); ++t) {
      for (std::size_t i = 0; i < m.backgrounds(); ++i) {
        for (std::size_t s = 0; s <= t; ++s) scores[i] += m(q, t, i, s);
      }
    }
  }
  return scores;
}

std::vector<std::size_t> select_collaborators(const std::vector<double>& scores, std::size_t k) {
  if (k == 0) throw DomainError("select_collaborators: k must be at least 1");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

std::size_t find_keyframe(const RelevanceMatrix& m, std::size_t i) {
  if (i >= m.backgrounds()) throw DomainError("find_keyframe: background index out of range");
  std::size_t best = 0;
  double best_sum = -1.0;
  for (std::size_t s = 0; s < m.frames(); ++s) {
    double col = 0.0;
    for (std::size_t q = 0; q < 2; ++q) {
      for (std::size_t t = s; t < m.frames(); ++t) col += m(q, t, i, s);
    }
    if (col > best_sum) {
      best_sum = col;
      best = s;
    }
  }
  return best;
}

FrameWindow extract_window(std::size_t frames, std::size_t keyframe, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw DomainError("extract_window: ratio must lie in (0, 1]");
  const auto len = static_cast<std::size_t>(std::lround(ratio * static_cast<double>(frames)));
  const long half = static_cast<long>(len / 2);
  const long hi = static_cast<long>(frames) - static_cast<long>(len);
  const long a = std::clamp(static_cast<long>(keyframe) - half, 0L, std::max(0L, hi));
  return {static_cast<std::size_t>(a), static_cast<std::size_t>(a) + len};
}

std::vector<Collaborator> find_collaborators(const RelevanceMatrix& m, std::size_t k, double ratio) {
  const std::vector<double> scores = aggregate_relevance(m);
  std::vector<Collaborator> out;
  for (std::size_t i : select_collaborators(scores, k)) {
    const std::size_t key = find_keyframe(m, i);
    out.push_back({i, key, extract_window(m.frames(), key, ratio), scores[i]});
  }
  return out;
}

Json relevance_report(const RelevanceMatrix& m, const std::vector<Collaborator>& chosen, bool include_tensor) {
  Json j = Json::object();
  j["gamma"] = m.gamma();
  j["dim"] = RelevanceMatrix::kDim;
  j["frames"] = m.frames();
  j["scores"] = aggregate_relevance(m);
  Json cols = Json::array();
  for (const Collaborator& c : chosen) {
    Json cj = Json::object();
    cj["background"] = c.index;
    cj["score"] = c.score;
    cj["keyframe"] = c.keyframe;
    cj["window"] = Json::array({c.window.begin, c.window.end});
    cols.push_back(std::move(cj));
  }
  j["collaborators"] = std::move(cols);
  if (include_tensor) {
    // weights[q][t][i] holds the row over key frames s <= t.
    Json w = Json::array();
    for (std::size_t q = 0; q < 2; ++q) {
      Json qa = Json::array();
      for (std::size_t t = 0; t < m.frames(); ++t) {
        Json ta = Json::array();
        for (std::size_t i = 0; i < m.backgrounds(); ++i) {
          Json row = Json::array();
          for (std::size_t s = 0; s <= t; ++s) row.push_back(m(q, t, i, s));
          ta.push_back(std::move(row));
        }
        qa.push_back(std::move(ta));
      }
      w.push_back(std::move(qa));
    }
    j["weights"] = std::move(w);
  }
  return j;
}

}  // namespace advscen
