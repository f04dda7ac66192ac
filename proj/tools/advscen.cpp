// Batch front end: generate -> evolve -> evaluate -> report.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "advscen/errors.hpp"
#include "advscen/pipeline.hpp"

using namespace advscen;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::optional<std::string> backend;
  std::optional<double> gamma, ratio, lambda1, lambda2, lambda3;
  std::optional<std::size_t> k, seeds, backgrounds;
  std::optional<std::string> out, data, prompts;
  bool no_occlusion = false;
  bool dump_graph = false;
};

RunConfig build_config(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.jobs) c.jobs = *f.jobs;
  if (f.backend) {
    const auto m = parse_backend_mode(*f.backend);
    if (!m) throw ParseError("unknown backend `" + *f.backend + "`", "backend");
    c.backend.mode = *m;
  }
  if (f.gamma) c.evolve.gamma = *f.gamma;
  if (f.ratio) c.evolve.ratio = *f.ratio;
  if (f.k) c.evolve.k = *f.k;
  if (f.lambda1) c.evolve.weights.lambda1 = *f.lambda1;
  if (f.lambda2) c.evolve.weights.lambda2 = *f.lambda2;
  if (f.lambda3) c.evolve.weights.lambda3 = *f.lambda3;
  if (f.no_occlusion) c.evolve.weights.lambda2 = 0.0;
  if (f.seeds) c.seeds_per_prompt = *f.seeds;
  if (f.backgrounds) c.backgrounds = *f.backgrounds;
  if (f.out) c.out_dir = *f.out;
  if (f.data) c.data_dir = *f.data;
  if (f.prompts) c.prompts = *f.prompts;
  if (f.dump_graph) c.dump_graph = true;
  return c;
}

int report_summary(const char* stage, const StageSummary& s) {
  for (const Failure& f : s.failed) std::fprintf(stderr, "%s: %s failed: %s\n", stage, f.id.c_str(), f.message.c_str());
  std::printf("%s: %zu ok, %zu failed\n", stage, s.ok.size(), s.failed.size());
  return s.failed.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial driving scenario generation and closed-loop evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "RunConfig JSON file")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "root seed");
  app.add_option("--jobs", f.jobs, "scenarios processed in parallel");
  app.add_option("--backend", f.backend, "semantic backend")->check(CLI::IsMember({"template", "remote"}));
  app.add_option("--gamma", f.gamma, "relevance decay");
  app.add_option("--k", f.k, "collaborators per scenario");
  app.add_option("--ratio", f.ratio, "perturbation window ratio");
  app.add_option("--lambda1", f.lambda1, "proximity weight");
  app.add_option("--lambda2", f.lambda2, "occlusion weight");
  app.add_option("--lambda3", f.lambda3, "smoothness weight");
  app.add_flag("--no-occlusion-loss", f.no_occlusion, "set lambda2 to 0");
  app.add_option("--seeds", f.seeds, "seeds per base prompt");
  app.add_option("--backgrounds", f.backgrounds, "background vehicles per scenario");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--data", f.data, "data directory (knowledge base, roads, templates)");
  app.add_option("--prompts", f.prompts, "base prompt file");
  app.add_flag("--dump-graph", f.dump_graph, "write relevance tensors next to evolved scenarios");

  auto* gen = app.add_subcommand("generate", "write meta-scenarios and Scenic text");
  auto* evo = app.add_subcommand("evolve", "add background flow and perturb collaborators");
  std::string stage = "adversarial";
  auto* eval = app.add_subcommand("evaluate", "simulate a stage and aggregate metrics");
  eval->add_option("--stage", stage, "scene variant")->check(CLI::IsMember({"benign", "meta", "adversarial"}));
  std::string scenario_file, sim_out = "rollout";
  auto* sim = app.add_subcommand("simulate", "replay one scenario file");
  sim->add_option("scenario", scenario_file, "scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--log-dir", sim_out, "where rollout.json/csv go");
  auto* rep = app.add_subcommand("report", "render the stage metric table");
  auto* all = app.add_subcommand("run", "generate, evolve, evaluate every stage, report");
  auto* cfg_dump = app.add_subcommand("config", "print the effective RunConfig");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const RunConfig c = build_config(f);
    if (cfg_dump->parsed()) {
      std::cout << format_json(to_json(c)) << "\n";
      return 0;
    }
    if (gen->parsed()) return report_summary("generate", cmd_generate(c));
    if (evo->parsed()) return report_summary("evolve", cmd_evolve(c));
    if (eval->parsed()) {
      const StageSummary s = cmd_evaluate(c, *parse_stage(stage));
      const int rc = report_summary(stage.c_str(), s);
      if (s.report) std::cout << metrics_table({{stage, *s.report}});
      return rc;
    }
    if (sim->parsed()) {
      const RolloutResult r = cmd_simulate(c, scenario_file, sim_out);
      std::printf("termination %s after %zu frames\n", std::string(to_string(r.log.termination)).c_str(),
                  r.log.frames.size());
      std::cout << metrics_table({{"rollout", r.metrics}});
      return 0;
    }
    if (rep->parsed()) {
      std::cout << cmd_report(c);
      return 0;
    }
    if (all->parsed()) {
      int rc = report_summary("generate", cmd_generate(c));
      rc = std::max(rc, report_summary("evolve", cmd_evolve(c)));
      for (Stage s : {Stage::kBenign, Stage::kMeta, Stage::kAdversarial}) {
        rc = std::max(rc, report_summary(std::string(to_string(s)).c_str(), cmd_evaluate(c, s)));
      }
      std::cout << cmd_report(c);
      return rc;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
