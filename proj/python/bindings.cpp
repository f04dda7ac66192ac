#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <utility>
#include <vector>

#include "advscen/errors.hpp"
#include "advscen/metrics.hpp"
#include "advscen/perturb.hpp"
#include "advscen/pipeline.hpp"
#include "advscen/relevance.hpp"
#include "advscen/scenario_io.hpp"

namespace py = pybind11;
using namespace advscen;

namespace {

using PyPoints = std::vector<std::pair<double, double>>;

std::vector<Vec2> to_points(const PyPoints& p) {
  std::vector<Vec2> out;
  out.reserve(p.size());
  for (const auto& [x, y] : p) out.push_back({x, y});
  return out;
}

PyPoints from_points(const std::vector<Vec2>& p) {
  PyPoints out;
  out.reserve(p.size());
  for (const Vec2& v : p) out.emplace_back(v.x, v.y);
  return out;
}

RunConfig config_from(const std::string& text) {
  return text.empty() ? RunConfig{} : run_config_from_json(Json::parse(text));
}

RelevanceMatrix relevance_of(const PyPoints& ego, const PyPoints& adv, const std::vector<PyPoints>& bg, double gamma) {
  std::vector<Trajectory> b;
  for (const PyPoints& p : bg) b.emplace_back(kDefaultDt, to_points(p));
  return build_relevance(Trajectory(kDefaultDt, to_points(ego)), Trajectory(kDefaultDt, to_points(adv)), b, gamma);
}

py::dict terms_dict(const LossTerms& t) {
  py::dict d;
  d["total"] = t.total;
  d["l_ego"] = t.l_ego;
  d["l_occ"] = t.l_occ;
  d["l_smooth"] = t.l_smooth;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<Error>(m, "AdvscenError", PyExc_ValueError);

  m.def("default_config", [] { return to_json(RunConfig{}).dump(); });

  m.def(
      "relevance",
      [](const PyPoints& ego, const PyPoints& adv, const std::vector<PyPoints>& bg, double gamma) {
        const RelevanceMatrix r = relevance_of(ego, adv, bg, gamma);
        std::vector<std::vector<std::vector<std::vector<double>>>> w(2);
        for (std::size_t q = 0; q < 2; ++q) {
          w[q].resize(r.frames());
          for (std::size_t t = 0; t < r.frames(); ++t) {
            w[q][t].assign(r.backgrounds(), std::vector<double>(r.frames()));
            for (std::size_t i = 0; i < r.backgrounds(); ++i)
              for (std::size_t s = 0; s < r.frames(); ++s) w[q][t][i][s] = r(q, t, i, s);
          }
        }
        return w;
      },
      py::arg("ego"), py::arg("adv"), py::arg("backgrounds"), py::arg("gamma") = 0.8);

  m.def(
      "aggregate_relevance",
      [](const PyPoints& ego, const PyPoints& adv, const std::vector<PyPoints>& bg, double gamma) {
        return aggregate_relevance(relevance_of(ego, adv, bg, gamma));
      },
      py::arg("ego"), py::arg("adv"), py::arg("backgrounds"), py::arg("gamma") = 0.8);

  m.def("select_collaborators", &select_collaborators, py::arg("scores"), py::arg("k"));

  m.def(
      "extract_window",
      [](std::size_t frames, std::size_t keyframe, double ratio) {
        const FrameWindow w = extract_window(frames, keyframe, ratio);
        return std::make_pair(w.begin, w.end);
      },
      py::arg("frames"), py::arg("keyframe"), py::arg("ratio") = 0.6);

  m.def(
      "loss",
      [](const PyPoints& seg, const PyPoints& ego, const PyPoints& adv, double l1, double l2, double l3) {
        return terms_dict(loss(to_points(seg), to_points(ego), to_points(adv), {l1, l2, l3}));
      },
      py::arg("seg"), py::arg("ego"), py::arg("adv"), py::arg("lambda1") = 0.3, py::arg("lambda2") = 0.2,
      py::arg("lambda3") = 0.5);

  m.def(
      "loss_gradient",
      [](const PyPoints& seg, const PyPoints& ego, const PyPoints& adv, double l1, double l2, double l3) {
        return from_points(loss_gradient(to_points(seg), to_points(ego), to_points(adv), {l1, l2, l3}));
      },
      py::arg("seg"), py::arg("ego"), py::arg("adv"), py::arg("lambda1") = 0.3, py::arg("lambda2") = 0.2,
      py::arg("lambda3") = 0.5);

  m.def(
      "generate",
      [](const std::string& prompt, std::size_t seed_index, const std::string& config) {
        const RunConfig c = config_from(config);
        const Resources r = load_resources(c);
        const BasePrompt* chosen = nullptr;
        for (const BasePrompt& p : r.prompts) {
          if (p.name == prompt) chosen = &p;
        }
        const BasePrompt adhoc{"prompt", prompt, ""};
        const MetaResult res = generate_meta(c, r, chosen ? *chosen : adhoc, seed_index);
        AdvScenario s;
        s.meta = res.meta;
        return py::make_tuple(res.id, serialize_scenario(s), res.scenic);
      },
      py::arg("prompt"), py::arg("seed_index") = 0, py::arg("config") = "");

  m.def(
      "evolve",
      [](const std::string& scenario, const std::string& id, const std::string& config) {
        const EvolveResult r = evolve_meta(config_from(config), parse_scenario(scenario).meta, id);
        return serialize_scenario(r.scenario);
      },
      py::arg("scenario"), py::arg("id"), py::arg("config") = "");

  m.def(
      "simulate",
      [](const std::string& scenario, const std::string& stage, const std::string& config) {
        const auto st = parse_stage(stage);
        if (!st) throw DomainError("unknown stage: " + stage);
        const RunConfig c = config_from(config);
        return to_json(evaluate_scenario(c, stage_view(parse_scenario(scenario), *st)).metrics).dump();
      },
      py::arg("scenario"), py::arg("stage") = "adversarial", py::arg("config") = "");
}
