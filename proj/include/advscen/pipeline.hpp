#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "advscen/instantiate.hpp"
#include "advscen/knowledge.hpp"
#include "advscen/metrics.hpp"
#include "advscen/perturb.hpp"
#include "advscen/roads.hpp"
#include "advscen/semantics.hpp"
#include "advscen/sim.hpp"
#include "advscen/traffic.hpp"

namespace advscen {

enum class Stage { kBenign, kMeta, kAdversarial };
std::string_view to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view s);

struct RunConfig {
  std::uint64_t seed = 7;
  std::size_t seeds_per_prompt = 10;
  std::size_t backgrounds = 10;
  std::size_t retrieve_k = 5;
  std::filesystem::path data_dir = ADVSCEN_DATA_DIR;
  std::filesystem::path prompts;  // empty: <data_dir>/prompts.txt
  std::filesystem::path out_dir = "out";
  BackendConfig backend;          // seed and transport are set per scenario
  InstantiateOptions instantiate;
  EvolveConfig evolve;
  EgoPolicyConfig ego;
  ScoreWeights score;
  unsigned jobs = 1;
  bool dump_graph = false;
};

Json to_json(const RunConfig& c);
/// Missing keys keep their defaults; wrong types throw ParseError.
RunConfig run_config_from_json(const Json& j);
RunConfig load_run_config(const std::filesystem::path& path);

struct BasePrompt {
  std::string name;
  std::string text;
  std::string error;  // set for malformed lines; generating from it fails
};

/// `name|prompt` lines; '#' comments and blank lines are skipped. Malformed
/// lines are kept with `error` set so that only their scenarios fail.
std::vector<BasePrompt> load_prompts(const std::filesystem::path& path);

/// Everything a run reads from the data directory.
struct Resources {
  KnowledgeBase kb;
  SynonymTable synonyms;
  RoadLibrary roads;
  std::string scenic_template;
  std::vector<BasePrompt> prompts;
};

Resources load_resources(const RunConfig& c);

std::string scenario_id(const std::string& prompt_name, std::size_t seed_index);
std::uint64_t scenario_seed(std::uint64_t root, const std::string& id);

struct MetaResult {
  std::string id;
  std::vector<std::string> retrieved;  // knowledge entry ids, ranked
  SemanticTuple semantics;
  StructuredTuple tuple;
  MetaScenario meta;
  std::string scenic;
};

/// Retrieval, generation, parsing and instantiation for one prompt and seed.
MetaResult generate_meta(const RunConfig& c, const Resources& r, const BasePrompt& p, std::size_t seed_index);

/// Baseline flow for the scenario seed, then evolve_scenario.
EvolveResult evolve_meta(const RunConfig& c, const MetaScenario& meta, const std::string& id);

/// The scene simulated for a stage: benign keeps the baseline backgrounds and
/// drops the adversary, meta drops the backgrounds, adversarial is unchanged.
AdvScenario stage_view(const AdvScenario& s, Stage stage);

struct RolloutResult {
  RolloutLog log;
  MetricsReport metrics;
};

RolloutResult evaluate_scenario(const RunConfig& c, const AdvScenario& s);

/// Loss trace CSV: record,iter,total,l_ego,l_occ,l_smooth,lambda1,lambda2,lambda3
std::string loss_trace_csv(const std::vector<std::vector<LossTerms>>& traces, const LossWeights& w);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

struct Failure {
  std::string id;
  std::string message;
};

struct StageSummary {
  std::vector<std::string> ok;
  std::vector<Failure> failed;
  std::optional<MetricsReport> report;  // evaluate only
};

// File-based stages. Each scenario gets its own directory under out_dir and a
// failure in one scenario is recorded without stopping the others.
StageSummary cmd_generate(const RunConfig& c);
StageSummary cmd_evolve(const RunConfig& c);
StageSummary cmd_evaluate(const RunConfig& c, Stage stage);
RolloutResult cmd_simulate(const RunConfig& c, const std::filesystem::path& scenario, const std::filesystem::path& out);
/// Renders the stage reports found under out_dir; writes report.txt,
/// report.csv and bars.csv next to them and returns the table.
std::string cmd_report(const RunConfig& c);

/// In-memory run of the whole suite: every prompt and seed through all three
/// stages. Scenarios that fail to generate are listed and skipped.
struct SuiteResult {
  std::vector<std::string> ids;
  std::vector<Failure> failed;
  std::vector<std::vector<MetricsReport>> per_stage;  // [stage][scenario]
  std::vector<MetricsReport> aggregate;               // [stage]
};

SuiteResult run_suite(const RunConfig& c, const Resources& r);

}  // namespace advscen
