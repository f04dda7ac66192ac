#include "advscen/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "advscen/errors.hpp"
#include "advscen/rng.hpp"
#include "advscen/scenic.hpp"

namespace advscen {

namespace fs = std::filesystem;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kBenign: return "benign";
    case Stage::kMeta: return "meta";
    case Stage::kAdversarial: return "adversarial";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view s) {
  for (Stage v : {Stage::kBenign, Stage::kMeta, Stage::kAdversarial}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

namespace {

template <typename T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError("wrong type for `" + where + "." + key + "`", where + "." + key);
  }
}

void read_path(const Json& j, const char* key, fs::path& out, const std::string& where) {
  std::string s = out.string();
  read(j, key, s, where);
  out = s;
}

}  // namespace

Json to_json(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["seeds_per_prompt"] = c.seeds_per_prompt;
  j["backgrounds"] = c.backgrounds;
  j["retrieve_k"] = c.retrieve_k;
  j["data_dir"] = c.data_dir.string();
  j["prompts"] = c.prompts.string();
  j["out_dir"] = c.out_dir.string();
  j["jobs"] = c.jobs;
  j["dump_graph"] = c.dump_graph;
  j["backend"] = {{"mode", std::string(to_string(c.backend.mode))},
                  {"url", c.backend.url},
                  {"model", c.backend.model},
                  {"timeout_s", c.backend.timeout_s},
                  {"token_env", c.backend.token_env}};
  const InstantiateOptions& o = c.instantiate;
  j["instantiate"] = {{"trigger_distance", o.trigger_distance}, {"cut_in_gap", o.cut_in_gap},
                      {"cut_in_duration", o.cut_in_duration},   {"hard_brake_time", o.hard_brake_time},
                      {"hard_brake_decel", o.hard_brake_decel}, {"dt", o.dt}};
  const EvolveConfig& e = c.evolve;
  j["evolve"] = {{"k", e.k},
                 {"ratio", e.ratio},
                 {"gamma", e.gamma},
                 {"lambda1", e.weights.lambda1},
                 {"lambda2", e.weights.lambda2},
                 {"lambda3", e.weights.lambda3},
                 {"a_max", e.a_max},
                 {"blend_frames", e.blend_frames},
                 {"step", e.optimizer.step},
                 {"max_iters", e.optimizer.max_iters},
                 {"rel_tol", e.optimizer.rel_tol},
                 {"patience", e.optimizer.patience},
                 {"max_halvings", e.optimizer.max_halvings},
                 {"taper_frames", e.optimizer.taper_frames}};
  const EgoPolicyConfig& p = c.ego;
  j["ego"] = {{"cruise_speed", p.cruise_speed},
              {"max_brake", p.max_brake},
              {"reaction_delay", p.reaction_delay},
              {"detection_range", p.detection_range},
              {"fov", p.fov},
              {"lookahead", p.lookahead},
              {"comfort_accel", p.comfort_accel},
              {"ttc_horizon", p.ttc_horizon},
              {"front_margin", p.front_margin},
              {"goal_tolerance", p.goal_tolerance},
              {"max_frames", p.max_frames}};
  j["score"] = {{"safety", c.score.safety},
                {"function", c.score.function},
                {"etiquette", c.score.etiquette},
                {"a_ref", c.score.a_ref}};
  return j;
}

RunConfig run_config_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("run config must be an object");
  RunConfig c;
  const std::string w = "config";
  read(j, "seed", c.seed, w);
  read(j, "seeds_per_prompt", c.seeds_per_prompt, w);
  read(j, "backgrounds", c.backgrounds, w);
  read(j, "retrieve_k", c.retrieve_k, w);
  read_path(j, "data_dir", c.data_dir, w);
  read_path(j, "prompts", c.prompts, w);
  read_path(j, "out_dir", c.out_dir, w);
  read(j, "jobs", c.jobs, w);
  read(j, "dump_graph", c.dump_graph, w);
  if (const auto it = j.find("backend"); it != j.end()) {
    const std::string b = w + ".backend";
    std::string mode(to_string(c.backend.mode));
    read(*it, "mode", mode, b);
    const auto m = parse_backend_mode(mode);
    if (!m) throw ParseError("unknown backend mode `" + mode + "`", b + ".mode");
    c.backend.mode = *m;
    read(*it, "url", c.backend.url, b);
    read(*it, "model", c.backend.model, b);
    read(*it, "timeout_s", c.backend.timeout_s, b);
    read(*it, "token_env", c.backend.token_env, b);
  }
  if (const auto it = j.find("instantiate"); it != j.end()) {
    const std::string b = w + ".instantiate";
    InstantiateOptions& o = c.instantiate;
    read(*it, "trigger_distance", o.trigger_distance, b);
    read(*it, "cut_in_gap", o.cut_in_gap, b);
    read(*it, "cut_in_duration", o.cut_in_duration, b);
    read(*it, "hard_brake_time", o.hard_brake_time, b);
    read(*it, "hard_brake_decel", o.hard_brake_decel, b);
    read(*it, "dt", o.dt, b);
  }
  if (const auto it = j.find("evolve"); it != j.end()) {
    const std::string b = w + ".evolve";
    EvolveConfig& e = c.evolve;
    read(*it, "k", e.k, b);
    read(*it, "ratio", e.ratio, b);
    read(*it, "gamma", e.gamma, b);
    read(*it, "lambda1", e.weights.lambda1, b);
    read(*it, "lambda2", e.weights.lambda2, b);
    read(*it, "lambda3", e.weights.lambda3, b);
    read(*it, "a_max", e.a_max, b);
    read(*it, "blend_frames", e.blend_frames, b);
    read(*it, "step", e.optimizer.step, b);
    read(*it, "max_iters", e.optimizer.max_iters, b);
    read(*it, "rel_tol", e.optimizer.rel_tol, b);
    read(*it, "patience", e.optimizer.patience, b);
    read(*it, "max_halvings", e.optimizer.max_halvings, b);
    read(*it, "taper_frames", e.optimizer.taper_frames, b);
  }
  if (const auto it = j.find("ego"); it != j.end()) {
    const std::string b = w + ".ego";
    EgoPolicyConfig& p = c.ego;
    read(*it, "cruise_speed", p.cruise_speed, b);
    read(*it, "max_brake", p.max_brake, b);
    read(*it, "reaction_delay", p.reaction_delay, b);
    read(*it, "detection_range", p.detection_range, b);
    read(*it, "fov", p.fov, b);
    read(*it, "lookahead", p.lookahead, b);
    read(*it, "comfort_accel", p.comfort_accel, b);
    read(*it, "ttc_horizon", p.ttc_horizon, b);
    read(*it, "front_margin", p.front_margin, b);
    read(*it, "goal_tolerance", p.goal_tolerance, b);
    read(*it, "max_frames", p.max_frames, b);
  }
  if (const auto it = j.find("score"); it != j.end()) {
    const std::string b = w + ".score";
    read(*it, "safety", c.score.safety, b);
    read(*it, "function", c.score.function, b);
    read(*it, "etiquette", c.score.etiquette, b);
    read(*it, "a_ref", c.score.a_ref, b);
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  const std::string text = read_text_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("run config: ") + e.what());
  }
  return run_config_from_json(j);
}

std::vector<BasePrompt> load_prompts(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<BasePrompt> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto bar = line.find('|');
    if (bar == std::string::npos || bar == 0 || bar + 1 == line.size()) {
      out.push_back({"line" + std::to_string(line_no), line, "prompt line " + std::to_string(line_no) + " is not `name|text`"});
      continue;
    }
    out.push_back({line.substr(0, bar), line.substr(bar + 1), {}});
  }
  return out;
}

Resources load_resources(const RunConfig& c) {
  Resources r;
  r.kb = load_knowledge_base(c.data_dir);
  r.synonyms = SynonymTable::load(c.data_dir / "synonyms.txt");
  r.roads = load_road_library(c.data_dir / "roads.json");
  r.scenic_template = read_text_file(c.data_dir / "scenic_template.scenic");
  r.prompts = load_prompts(c.prompts.empty() ? c.data_dir / "prompts.txt" : c.prompts);
  return r;
}

std::string scenario_id(const std::string& prompt_name, std::size_t seed_index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "-s%02zu", seed_index);
  return prompt_name + buf;
}

std::uint64_t scenario_seed(std::uint64_t root, const std::string& id) { return substream_seed(root, "scenario/" + id); }

MetaResult generate_meta(const RunConfig& c, const Resources& r, const BasePrompt& p, std::size_t seed_index) {
  MetaResult out;
  out.id = scenario_id(p.name, seed_index);
  if (!p.error.empty()) throw ParseError(p.error, "prompt");
  const std::uint64_t seed = scenario_seed(c.seed, out.id);
  const auto retrieved = retrieve(r.kb, p.text, c.retrieve_k);
  for (const KnowledgeEntry& e : retrieved) out.retrieved.push_back(e.id);
  BackendConfig backend = c.backend;
  backend.seed = substream_seed(seed, "backend");
  out.semantics = generate_semantics(p.text, retrieved, backend);
  out.tuple = parse_semantics(out.semantics, r.synonyms);
  InstantiateOptions opt = c.instantiate;
  out.meta = instantiate_meta(out.tuple, r.roads, opt);
  out.meta.context.annotations["scenario"] = out.id;
  out.meta.context.annotations["prompt"] = p.name;
  const ValidationReport issues = validate_scenario(out.meta);
  if (!issues.empty()) throw InstantiationError("invalid meta-scenario: " + format_report(issues));
  out.scenic = emit_scenic(out.meta, r.scenic_template);
  return out;
}

EvolveResult evolve_meta(const RunConfig& c, const MetaScenario& meta, const std::string& id) {
  FlowConfig flow;
  flow.frames = meta.frames();
  flow.dt = meta.dt();
  const std::uint64_t seed = substream_seed(scenario_seed(c.seed, id), "flow");
  const std::vector<Agent> bg = generate_background_flow(meta.context, c.backgrounds, seed, flow);
  return evolve_scenario(meta, bg, c.evolve);
}

AdvScenario stage_view(const AdvScenario& s, Stage stage) {
  AdvScenario v;
  v.meta = s.meta;
  switch (stage) {
    case Stage::kBenign:
      v.meta.adversary.reset();
      v.backgrounds = s.baseline_backgrounds();
      break;
    case Stage::kMeta:
      break;
    case Stage::kAdversarial:
      v = s;
      break;
  }
  return v;
}

RolloutResult evaluate_scenario(const RunConfig& c, const AdvScenario& s) {
  RolloutResult r;
  r.log = simulate_closed_loop(s, c.ego);
  r.metrics = compute_rollout_metrics(r.log, s.meta.context.route, s.meta.context, c.score);
  return r;
}

std::string loss_trace_csv(const std::vector<std::vector<LossTerms>>& traces, const LossWeights& w) {
  std::string out = "record,iter,total,l_ego,l_occ,l_smooth,lambda1,lambda2,lambda3\n";
  char buf[256];
  for (std::size_t r = 0; r < traces.size(); ++r) {
    for (std::size_t i = 0; i < traces[r].size(); ++i) {
      const LossTerms& t = traces[r][i];
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r, i, t.total, t.l_ego,
                    t.l_occ, t.l_smooth, w.lambda1, w.lambda2, w.lambda3);
      out += buf;
    }
  }
  return out;
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

namespace {

struct Job {
  std::string id;
  std::string error;
};

// Scenario-level jobs run on their own threads; the optimizer stays serial
// inside each so the thread count is bounded by --jobs.
RunConfig per_scenario(const RunConfig& c) {
  RunConfig s = c;
  s.evolve.jobs = 1;
  return s;
}

void write_json(const fs::path& path, const Json& j) { write_text_file(path, format_json(j) + "\n"); }

Json read_json(const fs::path& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

Json manifest_json(const std::vector<Job>& jobs) {
  Json ok = Json::array();
  Json failed = Json::array();
  for (const Job& j : jobs) {
    if (j.error.empty()) {
      ok.push_back(j.id);
    } else {
      failed.push_back({{"id", j.id}, {"error", j.error}});
    }
  }
  return {{"scenarios", ok}, {"failed", failed}};
}

StageSummary summarize(const std::vector<Job>& jobs) {
  StageSummary s;
  for (const Job& j : jobs) {
    if (j.error.empty()) {
      s.ok.push_back(j.id);
    } else {
      s.failed.push_back({j.id, j.error});
    }
  }
  return s;
}

std::vector<std::string> manifest_ids(const fs::path& manifest) {
  const Json j = read_json(manifest);
  std::vector<std::string> ids;
  for (const Json& id : require_field(j, "scenarios", "manifest")) ids.push_back(id.get<std::string>());
  return ids;
}

template <typename Fn>
void run_guarded(Job& job, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    job.error = e.what();
  }
}

}  // namespace

StageSummary cmd_generate(const RunConfig& c) {
  const Resources res = load_resources(c);
  const fs::path dir = c.out_dir / "meta";
  std::vector<Job> jobs;
  std::vector<std::pair<std::size_t, std::size_t>> work;
  for (std::size_t p = 0; p < res.prompts.size(); ++p) {
    for (std::size_t s = 0; s < c.seeds_per_prompt; ++s) {
      jobs.push_back({scenario_id(res.prompts[p].name, s), {}});
      work.emplace_back(p, s);
    }
  }
  parallel_for(jobs.size(), c.jobs, [&](std::size_t i) {
    run_guarded(jobs[i], [&] {
      const MetaResult m = generate_meta(c, res, res.prompts[work[i].first], work[i].second);
      const fs::path d = dir / m.id;
      AdvScenario s;
      s.meta = m.meta;
      save_scenario(s, d / "scenario.json");
      write_text_file(d / "scenario.scenic", m.scenic);
      Json sem;
      sem["prompt"] = res.prompts[work[i].first].text;
      sem["retrieved"] = m.retrieved;
      sem["semantics"] = {{"C", m.semantics.phi_c}, {"P", m.semantics.phi_p}, {"B", m.semantics.phi_b},
                          {"R", m.semantics.phi_R}, {"L", m.semantics.phi_L}};
      sem["tuple"] = {{"class", std::string(to_string(m.tuple.cls))},
                      {"placement", std::string(to_string(m.tuple.placement))},
                      {"offset", m.tuple.offset},
                      {"behavior", std::string(to_string(m.tuple.behavior))},
                      {"road", std::string(to_string(m.tuple.road))},
                      {"light", std::string(to_string(m.tuple.light))}};
      write_json(d / "semantics.json", sem);
    });
  });
  write_json(dir / "manifest.json", manifest_json(jobs));
  return summarize(jobs);
}

StageSummary cmd_evolve(const RunConfig& c) {
  const RunConfig sc = per_scenario(c);
  const std::vector<std::string> ids = manifest_ids(c.out_dir / "meta" / "manifest.json");
  const fs::path dir = c.out_dir / "adversarial";
  std::vector<Job> jobs;
  for (const std::string& id : ids) jobs.push_back({id, {}});
  parallel_for(jobs.size(), c.jobs, [&](std::size_t i) {
    run_guarded(jobs[i], [&] {
      const AdvScenario meta = load_scenario(c.out_dir / "meta" / jobs[i].id / "scenario.json");
      const EvolveResult r = evolve_meta(sc, meta.meta, jobs[i].id);
      const fs::path d = dir / jobs[i].id;
      save_scenario(r.scenario, d / "scenario.json");
      write_text_file(d / "loss_trace.csv", loss_trace_csv(r.traces, c.evolve.weights));
      if (c.dump_graph) write_json(d / "relevance.json", relevance_report(r.relevance, r.collaborators, true));
    });
  });
  write_json(dir / "manifest.json", manifest_json(jobs));
  return summarize(jobs);
}

StageSummary cmd_evaluate(const RunConfig& c, Stage stage) {
  // Benign and adversarial scenes both come from the evolved files.
  const fs::path src = c.out_dir / (stage == Stage::kMeta ? "meta" : "adversarial");
  const std::vector<std::string> ids = manifest_ids(src / "manifest.json");
  const fs::path dir = c.out_dir / "eval" / std::string(to_string(stage));
  std::vector<Job> jobs;
  for (const std::string& id : ids) jobs.push_back({id, {}});
  std::vector<std::optional<MetricsReport>> reports(jobs.size());
  parallel_for(jobs.size(), c.jobs, [&](std::size_t i) {
    run_guarded(jobs[i], [&] {
      const AdvScenario s = stage_view(load_scenario(src / jobs[i].id / "scenario.json"), stage);
      const RolloutResult r = evaluate_scenario(c, s);
      const fs::path d = dir / jobs[i].id;
      write_json(d / "rollout.json", to_json(r.log));
      write_text_file(d / "rollout.csv", rollout_csv(r.log));
      write_json(d / "metrics.json", to_json(r.metrics));
      reports[i] = r.metrics;
    });
  });
  StageSummary sum = summarize(jobs);
  std::vector<MetricsReport> got;
  std::string csv = metrics_csv_header();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!reports[i]) continue;
    got.push_back(*reports[i]);
    csv += metrics_csv_row(jobs[i].id, *reports[i]);
  }
  Json report = manifest_json(jobs);
  if (!got.empty()) {
    sum.report = aggregate_suite(got);
    report["aggregate"] = to_json(*sum.report);
    csv += metrics_csv_row("suite", *sum.report);
  }
  write_json(dir / "report.json", report);
  write_text_file(dir / "report.csv", csv);
  return sum;
}

RolloutResult cmd_simulate(const RunConfig& c, const fs::path& scenario, const fs::path& out) {
  const RolloutResult r = evaluate_scenario(c, load_scenario(scenario));
  write_json(out / "rollout.json", to_json(r.log));
  write_text_file(out / "rollout.csv", rollout_csv(r.log));
  write_json(out / "metrics.json", to_json(r.metrics));
  return r;
}

std::string cmd_report(const RunConfig& c) {
  std::vector<std::pair<std::string, MetricsReport>> rows;
  for (Stage s : {Stage::kBenign, Stage::kMeta, Stage::kAdversarial}) {
    const fs::path p = c.out_dir / "eval" / std::string(to_string(s)) / "report.json";
    if (!fs::exists(p)) continue;
    const Json j = read_json(p);
    if (const auto it = j.find("aggregate"); it != j.end()) {
      rows.emplace_back(std::string(to_string(s)), metrics_from_json(*it, "aggregate"));
    }
  }
  if (rows.empty()) throw Error("no stage reports under `" + (c.out_dir / "eval").string() + "`");
  const std::string table = metrics_table(rows);
  std::string csv = metrics_csv_header();
  // Composite groups for bar charts: safety, completion, comfort.
  std::string bars = "stage,safety,completion,comfort\n";
  char buf[128];
  for (const auto& [label, r] : rows) {
    csv += metrics_csv_row(label, r);
    const double safety = 1.0 - std::clamp(r.cr + 0.1 * (r.rr + r.ss) + 0.05 * std::min(r.or_, 1.0), 0.0, 1.0);
    const double comfort = 1.0 - std::clamp(r.acc / c.score.a_ref, 0.0, 1.0);
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f\n", label.c_str(), safety, r.rf * r.comp, comfort);
    bars += buf;
  }
  const fs::path dir = c.out_dir / "eval";
  write_text_file(dir / "report.txt", table);
  write_text_file(dir / "report.csv", csv);
  write_text_file(dir / "bars.csv", bars);
  return table;
}

SuiteResult run_suite(const RunConfig& c, const Resources& r) {
  const RunConfig sc = per_scenario(c);
  struct Item {
    std::string id;
    std::string error;
    std::array<MetricsReport, 3> m;
  };
  std::vector<Item> items;
  std::vector<std::pair<std::size_t, std::size_t>> work;
  for (std::size_t p = 0; p < r.prompts.size(); ++p) {
    for (std::size_t s = 0; s < c.seeds_per_prompt; ++s) {
      items.push_back({scenario_id(r.prompts[p].name, s), {}, {}});
      work.emplace_back(p, s);
    }
  }
  parallel_for(items.size(), c.jobs, [&](std::size_t i) {
    try {
      const MetaResult m = generate_meta(sc, r, r.prompts[work[i].first], work[i].second);
      const EvolveResult e = evolve_meta(sc, m.meta, m.id);
      for (Stage st : {Stage::kBenign, Stage::kMeta, Stage::kAdversarial}) {
        items[i].m[static_cast<std::size_t>(st)] = evaluate_scenario(sc, stage_view(e.scenario, st)).metrics;
      }
    } catch (const std::exception& ex) {
      items[i].error = ex.what();
    }
  });
  SuiteResult out;
  out.per_stage.resize(3);
  for (const Item& it : items) {
    if (!it.error.empty()) {
      out.failed.push_back({it.id, it.error});
      continue;
    }
    out.ids.push_back(it.id);
    for (std::size_t s = 0; s < 3; ++s) out.per_stage[s].push_back(it.m[s]);
  }
  if (!out.ids.empty()) {
    for (std::size_t s = 0; s < 3; ++s) out.aggregate.push_back(aggregate_suite(out.per_stage[s]));
  }
  return out;
}

}  // namespace advscen
