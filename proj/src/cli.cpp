// Copyright 2026 The sqlfix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sqlfix/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <memory>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sqlfix/agent.hpp"
#include "sqlfix/evaluator.hpp"
#include "sqlfix/factory.hpp"
#include "sqlfix/jsonio.hpp"
#include "sqlfix/pg_executor.hpp"
#include "sqlfix/prompts.hpp"
#include "sqlfix/rewind.hpp"
#include "sqlfix/sqlite_executor.hpp"
#include "sqlfix/stats.hpp"

namespace sqlfix {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string iso8601_now() {
  std::time_t now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

// Options shared by every subcommand; config file values fill in flags
// the user (or environment) left unset.
struct CommonOpts {
  std::string config_path;
  std::string out_dir = "sqlfix-out";
  std::uint64_t seed = 0;
  int workers = 0;  // 0: pick hardware concurrency
  std::string isolation;
  std::string db_dir;

  json config;     // parsed config file, or null
  fs::path config_dir;

  CLI::Option* out_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
  CLI::Option* isolation_opt = nullptr;
  CLI::Option* db_dir_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOpts* c) {
  cmd->add_option("--config", c->config_path,
                  "JSON config file (backends, pg, defaults)")
      ->envname("SQLFIX_CONFIG");
  c->out_opt = cmd->add_option("--out", c->out_dir, "Output directory")
                   ->envname("SQLFIX_OUT");
  c->seed_opt = cmd->add_option("--seed", c->seed, "Run seed (recorded)")
                    ->envname("SQLFIX_SEED");
  c->workers_opt =
      cmd->add_option("--workers", c->workers, "Worker threads (0 = cores)")
          ->envname("SQLFIX_WORKERS");
  c->isolation_opt =
      cmd->add_option("--isolation", c->isolation,
                      "TransactionRollback or TemplateCopy")
          ->envname("SQLFIX_ISOLATION");
  c->db_dir_opt = cmd->add_option("--db-dir", c->db_dir,
                                  "Directory of database templates")
                      ->envname("SQLFIX_DB_DIR");
}

// Precedence: flag/env (CLI11 counts both) > config file > built-in.
template <typename T>
void config_fallback(const CLI::Option* opt, T* value, const json& config,
                     const char* key) {
  if (opt != nullptr && opt->count() > 0) return;
  if (config.is_object() && config.contains(key)) {
    *value = config.at(key).get<T>();
  }
}

void finish_common(CommonOpts* c) {
  if (!c->config_path.empty()) {
    c->config = json::parse(jsonio::read_text_file(c->config_path));
    c->config_dir = fs::path(c->config_path).parent_path();
  }
  config_fallback(c->out_opt, &c->out_dir, c->config, "out");
  config_fallback(c->seed_opt, &c->seed, c->config, "seed");
  config_fallback(c->workers_opt, &c->workers, c->config, "workers");
  config_fallback(c->isolation_opt, &c->isolation, c->config, "isolation");
  config_fallback(c->db_dir_opt, &c->db_dir, c->config, "template_dir");
  if (c->workers <= 0) {
    unsigned hw = std::thread::hardware_concurrency();
    c->workers = hw == 0 ? 1 : static_cast<int>(hw);
  }
}

std::optional<IsolationMode> parse_isolation_or_throw(const std::string& s) {
  if (s.empty()) return std::nullopt;
  auto mode = isolation_from_string(s);
  if (!mode) {
    throw CLI::ValidationError(
        "--isolation",
        fmt::format("unknown isolation mode '{}' (expected "
                    "TransactionRollback or TemplateCopy)",
                    s));
  }
  return mode;
}

fs::path default_db_dir(const fs::path& anchor) {
  fs::path base = fs::is_directory(anchor) ? anchor : anchor.parent_path();
  fs::path candidate = base / "databases";
  return fs::is_directory(candidate) ? candidate : base;
}

std::unique_ptr<Sandbox> build_sandbox(const CommonOpts& c,
                                       const fs::path& anchor) {
  fs::path db_dir =
      c.db_dir.empty() ? default_db_dir(anchor) : fs::path(c.db_dir);
  auto sandbox = std::make_unique<Sandbox>();
  sandbox->register_executor(Dialect::kEmbeddedRef,
                             std::make_shared<SqliteExecutorFactory>(db_dir));
  PgSettings pg;
  if (c.config.is_object() && c.config.contains("pg")) {
    const json& p = c.config.at("pg");
    pg.host = p.value("host", pg.host);
    pg.port = p.value("port", pg.port);
    pg.user = p.value("user", pg.user);
    pg.password = p.value("password", pg.password);
    pg.dbname = p.value("dbname", pg.dbname);
  }
  pg = pg_settings_from_env(std::move(pg));
  sandbox->register_executor(Dialect::kPostgresLike,
                             std::make_shared<PgExecutorFactory>(pg));
  return sandbox;
}

// "scripted:<replay file>" builds a throwaway scripted backend; anything
// else is an id resolved through the config's backend registry.
std::shared_ptr<Backend> resolve_backend(const CommonOpts& c,
                                         const std::string& spec) {
  const std::string prefix = "scripted:";
  if (spec.rfind(prefix, 0) == 0) {
    fs::path replay = spec.substr(prefix.size());
    if (replay.is_relative() && !c.config_dir.empty() &&
        !fs::exists(replay)) {
      replay = c.config_dir / replay;
    }
    return ScriptedBackend::from_replay_file("scripted", replay);
  }
  if (c.config_path.empty()) {
    throw BackendError(fmt::format(
        "backend '{}' needs --config with a backends section", spec));
  }
  BackendRegistry registry = BackendRegistry::from_config_file(c.config_path);
  return registry.get(spec);
}

void write_json_file(const fs::path& path, const json& j) {
  jsonio::write_text_file(path, j.dump(2) + "\n");
}

void write_outputs(const CommonOpts& c, const RunManifest& manifest,
                   const json& payload, std::int64_t elapsed_ms) {
  fs::create_directories(c.out_dir);
  write_json_file(fs::path(c.out_dir) / "manifest.json",
                  manifest_to_json(manifest));
  write_json_file(fs::path(c.out_dir) / "report.json",
                  make_report(manifest, payload, elapsed_ms));
}

json case_outcome_json(const CaseOutcome& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["passed"] = c.passed;
  j["detail"] = c.detail;
  return j;
}

json task_outcome_json(const TaskOutcome& t) {
  json j;
  j["task_id"] = t.task_id;
  j["passed"] = t.passed;
  json cases = json::array();
  for (const auto& c : t.per_case) cases.push_back(case_outcome_json(c));
  j["cases"] = cases;
  return j;
}

struct Timer {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  std::int64_t elapsed_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start)
        .count();
  }
};

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  CommonOpts common;
  std::string tasks_path;
  std::string pred_path;
};

int run_eval(EvalArgs& a) {
  Timer timer;
  finish_common(&a.common);
  auto tasks = jsonio::load_tasks(a.tasks_path);
  auto predictions = jsonio::load_predictions(a.pred_path);
  auto sandbox_owner = build_sandbox(a.common, a.tasks_path);
  Sandbox& sandbox = *sandbox_owner;

  EvalOptions opts;
  opts.isolation = parse_isolation_or_throw(a.common.isolation);
  opts.workers = a.common.workers;
  DatasetResult result = evaluate_dataset(sandbox, tasks, predictions, opts);

  json payload;
  payload["sr_report"] = jsonio::sr_report_to_json(result.report);
  json outcomes = json::array();
  for (const auto& o : result.outcomes) outcomes.push_back(task_outcome_json(o));
  payload["outcomes"] = outcomes;

  RunManifest manifest;
  manifest.command = "eval";
  manifest.config_path = a.common.config_path;
  manifest.dataset_paths = {a.tasks_path, a.pred_path};
  manifest.out_dir = a.common.out_dir;
  manifest.seed = a.common.seed;
  manifest.workers = a.common.workers;
  manifest.isolation = a.common.isolation;
  write_outputs(a.common, manifest, payload, timer.elapsed_ms());

  fmt::print("SR {}% ({}/{}), report at {}/report.json\n",
             format_percent(result.report.n_passed, result.report.n_total),
             result.report.n_passed, result.report.n_total,
             a.common.out_dir);
  return 0;
}

// ---- redteam -------------------------------------------------------------

struct RedteamArgs {
  CommonOpts common;
  std::string tasks_path;
};

int run_redteam(RedteamArgs& a) {
  Timer timer;
  finish_common(&a.common);
  auto tasks = jsonio::load_tasks(a.tasks_path);
  auto sandbox_owner = build_sandbox(a.common, a.tasks_path);
  Sandbox& sandbox = *sandbox_owner;

  EvalOptions opts;
  opts.isolation = parse_isolation_or_throw(a.common.isolation);

  json results = json::array();
  int n_valid = 0;
  for (const auto& task : tasks) {
    RedTeamResult r = red_team_check(sandbox, task, opts);
    json j;
    j["task_id"] = task.task_id;
    j["valid"] = r.valid;
    j["solution_passes"] = r.solution_passes;
    j["issue_fails"] = r.issue_fails;
    j["reason"] = r.reason;
    results.push_back(j);
    if (r.valid) ++n_valid;
  }
  json payload;
  payload["n_total"] = static_cast<int>(tasks.size());
  payload["n_valid"] = n_valid;
  payload["results"] = results;

  RunManifest manifest;
  manifest.command = "redteam";
  manifest.config_path = a.common.config_path;
  manifest.dataset_paths = {a.tasks_path};
  manifest.out_dir = a.common.out_dir;
  manifest.seed = a.common.seed;
  manifest.workers = a.common.workers;
  manifest.isolation = a.common.isolation;
  write_outputs(a.common, manifest, payload, timer.elapsed_ms());

  fmt::print("red-team valid {}/{}\n", n_valid, tasks.size());
  return 0;
}

// ---- agent ---------------------------------------------------------------

struct AgentArgs {
  CommonOpts common;
  std::string tasks_path;
  std::string backend_spec;
  std::string thought_backend_spec;
  std::string mode = "SqlAct";
  bool gtm = false;
  int max_turns = 5;
  double temperature = 0.0;
  std::string prompt_set = "default";
};

int run_agent(AgentArgs& a) {
  Timer timer;
  finish_common(&a.common);
  auto tasks = jsonio::load_tasks(a.tasks_path);
  auto sandbox_owner = build_sandbox(a.common, a.tasks_path);
  Sandbox& sandbox = *sandbox_owner;

  auto mode = agent_mode_from_string(a.mode);
  if (!mode) {
    throw CLI::ValidationError(
        "--mode", fmt::format("unknown agent mode '{}'", a.mode));
  }
  AgentBackends backends;
  backends.model = resolve_backend(a.common, a.backend_spec);
  if (!a.thought_backend_spec.empty()) {
    backends.thought_model =
        resolve_backend(a.common, a.thought_backend_spec);
  }
  AgentConfig config;
  config.max_turns = a.max_turns;
  config.mode = *mode;
  config.gtm = a.gtm;
  config.temperature = a.temperature;
  config.prompt_set = a.prompt_set;
  PromptSet prompts = prompts_for_bundle(a.prompt_set);

  EvalOptions eval_opts;
  eval_opts.isolation = parse_isolation_or_throw(a.common.isolation);

  std::vector<Trajectory> trajectories;
  json episodes = json::array();
  std::string pred_lines;
  std::vector<bool> outcomes;
  for (const auto& task : tasks) {
    json ep;
    ep["task_id"] = task.task_id;
    try {
      auto session = sandbox.open_session(task, eval_opts.isolation);
      EpisodeResult result =
          run_episode(sandbox, task, *session, backends, config, prompts);
      sandbox.close_session(*session);
      Trajectory traj = std::move(result.trajectory);
      traj.strategy = config.gtm ? "GTM" : to_string(config.mode);
      if (result.failure.has_value()) {
        ep["error"] = *result.failure;
      }
      bool passed = false;
      if (traj.final_sql.has_value()) {
        auto stmts = sqltext::split_statements(*traj.final_sql);
        if (!stmts.empty()) {
          passed = evaluate_task(sandbox, task, stmts, eval_opts).passed;
          traj.passed = passed;
          json pred;
          pred["task_id"] = task.task_id;
          pred["sql"] = stmts;
          pred_lines += pred.dump();
          pred_lines += "\n";
        }
      }
      outcomes.push_back(passed);
      ep["passed"] = passed;
      ep["turns"] = static_cast<int>(traj.steps.size());
      ep["tokens_in"] = traj.tokens_in;
      ep["tokens_out"] = traj.tokens_out;
      trajectories.push_back(std::move(traj));
    } catch (const SandboxError& e) {
      ep["error"] = e.what();
      ep["passed"] = false;
      outcomes.push_back(false);
    }
    episodes.push_back(ep);
  }

  fs::create_directories(a.common.out_dir);
  jsonio::save_trajectories(trajectories,
                            fs::path(a.common.out_dir) / "trajectories.jsonl");
  jsonio::write_text_file(fs::path(a.common.out_dir) / "predictions.jsonl",
                          pred_lines);

  int n_passed = 0;
  for (bool b : outcomes) n_passed += b ? 1 : 0;
  json payload;
  payload["episodes"] = episodes;
  payload["n_total"] = static_cast<int>(tasks.size());
  payload["n_passed"] = n_passed;
  if (!tasks.empty()) {
    payload["sr_percent"] =
        format_percent(n_passed, static_cast<int>(tasks.size()));
  }

  RunManifest manifest;
  manifest.command = "agent";
  manifest.config_path = a.common.config_path;
  manifest.dataset_paths = {a.tasks_path};
  manifest.backend_ids = {backends.model->id()};
  if (backends.thought_model) {
    manifest.backend_ids.push_back(backends.thought_model->id());
  }
  manifest.out_dir = a.common.out_dir;
  manifest.seed = a.common.seed;
  manifest.workers = a.common.workers;
  manifest.isolation = a.common.isolation;
  write_outputs(a.common, manifest, payload, timer.elapsed_ms());

  fmt::print("episodes {}, passing {}\n", tasks.size(), n_passed);
  return 0;
}

// ---- collect ---------------------------------------------------------

struct CollectArgs {
  CommonOpts common;
  std::string tasks_path;
  std::string backend_spec;
  std::string thought_backend_spec;
  std::string strategy = "Baseline";
  int max_tries = -1;
  double temperature = -1.0;
  int max_turns = 5;
  std::string checkpoint;
  std::string prompt_set = "default";
  CLI::Option* tries_opt = nullptr;
  CLI::Option* temp_opt = nullptr;
};

int run_collect(CollectArgs& a) {
  Timer timer;
  finish_common(&a.common);
  auto kind = strategy_from_string(a.strategy);
  if (!kind) {
    throw CLI::ValidationError(
        "--strategy",
        fmt::format("unknown strategy '{}' (expected Baseline, FPlan, "
                    "Rejection, or RejectFPlan)",
                    a.strategy));
  }
  auto tasks = jsonio::load_tasks(a.tasks_path);
  auto sandbox_owner = build_sandbox(a.common, a.tasks_path);
  Sandbox& sandbox = *sandbox_owner;

  AgentBackends backends;
  backends.model = resolve_backend(a.common, a.backend_spec);
  if (!a.thought_backend_spec.empty()) {
    backends.thought_model =
        resolve_backend(a.common, a.thought_backend_spec);
  }

  CollectOptions options;
  options.strategy = StrategyConfig::defaults(*kind);
  if (a.tries_opt != nullptr && a.tries_opt->count() > 0) {
    options.strategy.max_tries = a.max_tries;
  }
  if (a.temp_opt != nullptr && a.temp_opt->count() > 0) {
    options.strategy.temperature = a.temperature;
  }
  options.agent.max_turns = a.max_turns;
  options.agent.prompt_set = a.prompt_set;
  options.eval.isolation = parse_isolation_or_throw(a.common.isolation);
  if (a.common.config.is_object() && a.common.config.contains("cost")) {
    const json& cost = a.common.config.at("cost");
    options.cost.usd_per_1k_tokens_in =
        cost.value("usd_per_1k_tokens_in", 0.0);
    options.cost.usd_per_1k_tokens_out =
        cost.value("usd_per_1k_tokens_out", 0.0);
  }
  if (!a.checkpoint.empty()) options.checkpoint = a.checkpoint;

  PromptSet prompts = prompts_for_bundle(a.prompt_set);
  CollectResult result = collect(sandbox, tasks, backends, prompts, options);

  fs::create_directories(a.common.out_dir);
  jsonio::save_trajectories(result.trajectories,
                            fs::path(a.common.out_dir) / "trajectories.jsonl");
  std::string plan_lines;
  for (const auto& p : result.plans) {
    json j;
    j["task_id"] = p.task_id;
    j["plan"] = jsonio::plan_to_json(p.plan);
    plan_lines += j.dump();
    plan_lines += "\n";
  }
  jsonio::write_text_file(fs::path(a.common.out_dir) / "plans.jsonl",
                          plan_lines);

  json payload;
  payload["strategy"] = result.report.strategy;
  payload["n_instances"] = result.report.n_instances;
  payload["successful_traj"] = result.report.successful_traj;
  payload["total_tries"] = result.report.total_tries;
  payload["avg_tries"] = result.report.avg_tries;
  payload["db_time_ms"] = result.report.db_time_ms;
  payload["episode_time_ms"] = result.report.episode_time_ms;
  payload["tokens_in"] = result.report.tokens_in;
  payload["tokens_out"] = result.report.tokens_out;
  payload["cost_usd"] = result.report.cost_usd;
  payload["complete"] = result.complete;
  if (!result.complete) payload["failure"] = result.failure;

  RunManifest manifest;
  manifest.command = "collect";
  manifest.config_path = a.common.config_path;
  manifest.dataset_paths = {a.tasks_path};
  manifest.backend_ids = {backends.model->id()};
  if (backends.thought_model) {
    manifest.backend_ids.push_back(backends.thought_model->id());
  }
  manifest.out_dir = a.common.out_dir;
  manifest.seed = a.common.seed;
  manifest.workers = a.common.workers;
  manifest.isolation = a.common.isolation;
  write_outputs(a.common, manifest, payload, timer.elapsed_ms());

  fmt::print("{}: {}/{} successful, avg tries {:.2f}\n",
             result.report.strategy, result.report.successful_traj,
             result.report.n_instances, result.report.avg_tries);
  if (!result.complete) {
    fmt::print(stderr, "backend outage: {} (resume with --checkpoint)\n",
               result.failure);
    return 2;
  }
  return 0;
}

// ---- rewind ----------------------------------------------------------

struct RewindArgs {
  CommonOpts common;
  std::string corpus_path;
  std::vector<std::string> dbs;
  std::string dialect = "EmbeddedRef";
  std::string exclusion_path;
  std::size_t target = 1;
  int max_iter = 3;
  std::string backend_spec;
  std::string prompt_set = "default";
};

int run_rewind(RewindArgs& a) {
  Timer timer;
  finish_common(&a.common);
  auto dialect = dialect_from_string(a.dialect);
  if (!dialect) {
    throw CLI::ValidationError(
        "--dialect", fmt::format("unknown dialect '{}'", a.dialect));
  }
  auto corpus = jsonio::load_corpus(a.corpus_path);
  ExclusionList exclusion;
  if (!a.exclusion_path.empty()) {
    exclusion = jsonio::load_exclusion(a.exclusion_path);
  }
  auto sandbox_owner = build_sandbox(a.common, a.corpus_path);
  Sandbox& sandbox = *sandbox_owner;
  auto backend = resolve_backend(a.common, a.backend_spec);
  PromptSet prompts = prompts_for_bundle(a.prompt_set);

  std::vector<GymDatabase> dbs;
  for (const auto& ref : a.dbs) dbs.push_back({ref, *dialect});

  RewindConfig config;
  config.max_iter = a.max_iter;
  config.max_query_rounds = a.max_iter;
  config.target_size = a.target;

  BuildReport report =
      build_instances(corpus, dbs, exclusion, sandbox, *backend, prompts,
                      config);

  fs::create_directories(a.common.out_dir);
  std::string task_lines;
  for (const auto& inst : report.instances) {
    task_lines += jsonio::task_to_json(inst.task).dump();
    task_lines += "\n";
  }
  jsonio::write_text_file(fs::path(a.common.out_dir) / "tasks.jsonl",
                          task_lines);

  json payload;
  payload["instances"] = static_cast<int>(report.instances.size());
  payload["posts_seen"] = report.posts_seen;
  payload["posts_excluded"] = report.posts_excluded;
  payload["candidates_extracted"] = report.candidates_extracted;
  payload["tokens_in"] = report.tokens_in;
  payload["tokens_out"] = report.tokens_out;
  json provenance = json::array();
  for (const auto& inst : report.instances) {
    json p;
    p["task_id"] = inst.task.task_id;
    p["source_id"] = inst.provenance.source_id;
    p["db_ref"] = inst.provenance.db_ref;
    p["issue_iterations"] = inst.provenance.issue_iterations;
    p["query_rounds"] = inst.provenance.query_rounds;
    provenance.push_back(p);
  }
  payload["provenance"] = provenance;
  json rejects = json::array();
  for (const auto& r : report.rejects) {
    json j;
    j["source_id"] = r.source_id;
    j["db_ref"] = r.db_ref;
    j["stage"] = r.stage;
    j["reason"] = r.reason;
    rejects.push_back(j);
  }
  payload["rejects"] = rejects;

  RunManifest manifest;
  manifest.command = "rewind";
  manifest.config_path = a.common.config_path;
  manifest.dataset_paths = {a.corpus_path};
  manifest.backend_ids = {backend->id()};
  manifest.out_dir = a.common.out_dir;
  manifest.seed = a.common.seed;
  manifest.workers = a.common.workers;
  manifest.isolation = a.common.isolation;
  write_outputs(a.common, manifest, payload, timer.elapsed_ms());

  fmt::print("built {} instances ({} rejects), tasks at {}/tasks.jsonl\n",
             report.instances.size(), report.rejects.size(),
             a.common.out_dir);
  return 0;
}

// ---- stats -----------------------------------------------------------

struct StatsArgs {
  CommonOpts common;
  std::string tasks_path;
  int ngram = 3;
  std::string series_path;
};

int run_stats(StatsArgs& a) {
  Timer timer;
  finish_common(&a.common);
  auto tasks = jsonio::load_tasks(a.tasks_path);
  StatsReport report = dataset_stats(tasks, a.ngram);
  if (!a.series_path.empty()) {
    json series = json::parse(jsonio::read_text_file(a.series_path));
    auto xs = series.at("xs").get<std::vector<double>>();
    auto ys = series.at("ys").get<std::vector<double>>();
    report.correlation = pearson(xs, ys);
  }

  json payload;
  payload["n_tasks"] = report.n_tasks;
  payload["tokenizer"] = report.tokenizer;
  payload["ngram"] = report.ngram;
  json lengths;
  auto len_json = [](const LengthStats& l) {
    json j;
    j["mean"] = l.mean;
    j["max"] = l.max;
    return j;
  };
  lengths["user_query"] = len_json(report.user_query_len);
  lengths["issue_sql"] = len_json(report.issue_sql_len);
  lengths["solution_sql"] = len_json(report.solution_sql_len);
  payload["lengths"] = lengths;
  if (report.user_query_diversity) {
    payload["user_query_diversity"] = *report.user_query_diversity;
  }
  if (report.issue_sql_diversity) {
    payload["issue_sql_diversity"] = *report.issue_sql_diversity;
  }
  json categories;
  for (const auto& [category, count] : report.categories) {
    categories[to_string(category)] = count;
  }
  payload["categories"] = categories;
  if (report.correlation) payload["correlation"] = *report.correlation;

  RunManifest manifest;
  manifest.command = "stats";
  manifest.config_path = a.common.config_path;
  manifest.dataset_paths = {a.tasks_path};
  manifest.out_dir = a.common.out_dir;
  manifest.seed = a.common.seed;
  manifest.workers = a.common.workers;
  write_outputs(a.common, manifest, payload, timer.elapsed_ms());

  fmt::print("stats over {} tasks written to {}/report.json\n",
             report.n_tasks, a.common.out_dir);
  return 0;
}

// ---- export ----------------------------------------------------------

struct ExportArgs {
  CommonOpts common;
  std::string traj_path;
};

int run_export(ExportArgs& a) {
  Timer timer;
  finish_common(&a.common);
  auto all = jsonio::load_trajectories(a.traj_path);
  std::vector<Trajectory> passing;
  for (const auto& t : all) {
    if (t.passed.value_or(false)) passing.push_back(t);
  }
  fs::create_directories(a.common.out_dir);
  fs::path out_file = fs::path(a.common.out_dir) / "training.jsonl";
  export_training(passing, out_file);

  json payload;
  payload["exported"] = static_cast<int>(passing.size());
  payload["skipped_non_passing"] = static_cast<int>(all.size() -
                                                    passing.size());
  payload["file"] = "training.jsonl";

  RunManifest manifest;
  manifest.command = "export";
  manifest.config_path = a.common.config_path;
  manifest.dataset_paths = {a.traj_path};
  manifest.out_dir = a.common.out_dir;
  manifest.seed = a.common.seed;
  write_outputs(a.common, manifest, payload, timer.elapsed_ms());

  fmt::print("exported {} records to {} ({} skipped)\n", passing.size(),
             out_file.string(), all.size() - passing.size());
  return 0;
}

}  // namespace

json manifest_to_json(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["config"] = m.config_path;
  j["datasets"] = m.dataset_paths;
  j["backends"] = m.backend_ids;
  j["out"] = m.out_dir;
  j["seed"] = m.seed;
  j["workers"] = m.workers;
  j["isolation"] = m.isolation;
  return j;
}

json make_report(const RunManifest& manifest, json payload,
                 std::int64_t elapsed_ms) {
  json meta;
  meta["command"] = manifest.command;
  meta["finished_at"] = iso8601_now();
  meta["elapsed_ms"] = elapsed_ms;
  meta["manifest"] = manifest_to_json(manifest);
  json report;
  report["meta"] = meta;
  report["payload"] = std::move(payload);
  return report;
}

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"sqlfix: debugging toolkit for SQL issue tasks"};
  app.require_subcommand(1);

  EvalArgs eval_args;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Score predictions against a task set");
  eval_cmd->add_option("--tasks", eval_args.tasks_path, "Task file or dir")
      ->required();
  eval_cmd->add_option("--pred", eval_args.pred_path, "Predictions JSONL")
      ->required();
  add_common(eval_cmd, &eval_args.common);

  RedteamArgs redteam_args;
  CLI::App* redteam_cmd = app.add_subcommand(
      "redteam", "Check that each task's tests reject the issue SQL and "
                 "accept the solution");
  redteam_cmd
      ->add_option("--tasks", redteam_args.tasks_path, "Task file or dir")
      ->required();
  add_common(redteam_cmd, &redteam_args.common);

  AgentArgs agent_args;
  CLI::App* agent_cmd =
      app.add_subcommand("agent", "Run debugging episodes over a task set");
  agent_cmd->add_option("--tasks", agent_args.tasks_path, "Task file or dir")
      ->required();
  agent_cmd
      ->add_option("--backend", agent_args.backend_spec,
                   "Backend id from config, or scripted:<replay.json>")
      ->envname("SQLFIX_BACKEND")
      ->required();
  agent_cmd->add_option("--thought-backend", agent_args.thought_backend_spec,
                        "Thought-model backend (enables dual-model runs)");
  agent_cmd->add_option("--mode", agent_args.mode, "SqlAct or ToolAct");
  agent_cmd->add_flag("--gtm", agent_args.gtm,
                      "Dual-model turns (needs --thought-backend)");
  agent_cmd->add_option("--max-turns", agent_args.max_turns,
                        "Turn budget per episode");
  agent_cmd->add_option("--temperature", agent_args.temperature,
                        "Sampling temperature");
  agent_cmd->add_option("--prompts", agent_args.prompt_set,
                        "Prompt bundle: 'default' or a directory");
  add_common(agent_cmd, &agent_args.common);

  CollectArgs collect_args;
  CLI::App* collect_cmd = app.add_subcommand(
      "collect", "Collect passing trajectories under a strategy");
  collect_cmd
      ->add_option("--tasks", collect_args.tasks_path, "Task file or dir")
      ->required();
  collect_cmd
      ->add_option("--backend", collect_args.backend_spec,
                   "Backend id from config, or scripted:<replay.json>")
      ->envname("SQLFIX_BACKEND")
      ->required();
  collect_cmd->add_option("--thought-backend",
                          collect_args.thought_backend_spec,
                          "Thought-model backend");
  collect_cmd->add_option("--strategy", collect_args.strategy,
                          "Baseline, FPlan, Rejection, or RejectFPlan");
  collect_args.tries_opt = collect_cmd->add_option(
      "--max-tries", collect_args.max_tries, "Tries per instance");
  collect_args.temp_opt = collect_cmd->add_option(
      "--temperature", collect_args.temperature, "Retry temperature");
  collect_cmd->add_option("--max-turns", collect_args.max_turns,
                          "Turn budget per episode");
  collect_cmd->add_option("--checkpoint", collect_args.checkpoint,
                          "Resumable checkpoint JSONL");
  collect_cmd->add_option("--prompts", collect_args.prompt_set,
                          "Prompt bundle: 'default' or a directory");
  add_common(collect_cmd, &collect_args.common);

  RewindArgs rewind_args;
  CLI::App* rewind_cmd = app.add_subcommand(
      "rewind", "Generate debugging tasks from a post corpus");
  rewind_cmd->add_option("--corpus", rewind_args.corpus_path, "Corpus JSONL")
      ->required();
  rewind_cmd->add_option("--dbs", rewind_args.dbs, "Database refs")
      ->required()
      ->delimiter(',');
  rewind_cmd->add_option("--dialect", rewind_args.dialect,
                         "Dialect for all --dbs");
  rewind_cmd->add_option("--exclusion", rewind_args.exclusion_path,
                         "Identifier exclusion list file");
  rewind_cmd->add_option("--target", rewind_args.target,
                         "Stop after this many instances");
  rewind_cmd->add_option("--max-iter", rewind_args.max_iter,
                         "Refinement iterations per stage");
  rewind_cmd
      ->add_option("--backend", rewind_args.backend_spec,
                   "Backend id from config, or scripted:<replay.json>")
      ->envname("SQLFIX_BACKEND")
      ->required();
  rewind_cmd->add_option("--prompts", rewind_args.prompt_set,
                         "Prompt bundle: 'default' or a directory");
  add_common(rewind_cmd, &rewind_args.common);

  StatsArgs stats_args;
  CLI::App* stats_cmd =
      app.add_subcommand("stats", "Corpus statistics for a task set");
  stats_cmd->add_option("--tasks", stats_args.tasks_path, "Task file or dir")
      ->required();
  stats_cmd->add_option("--ngram", stats_args.ngram, "n-gram size");
  stats_cmd->add_option("--series", stats_args.series_path,
                        "JSON file {\"xs\": [...], \"ys\": [...]} for "
                        "correlation");
  add_common(stats_cmd, &stats_args.common);

  ExportArgs export_args;
  CLI::App* export_cmd = app.add_subcommand(
      "export", "Export passing trajectories as chat-format training data");
  export_cmd->add_option("--traj", export_args.traj_path, "Trajectory JSONL")
      ->required();
  add_common(export_cmd, &export_args.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (redteam_cmd->parsed()) return run_redteam(redteam_args);
    if (agent_cmd->parsed()) return run_agent(agent_args);
    if (collect_cmd->parsed()) return run_collect(collect_args);
    if (rewind_cmd->parsed()) return run_rewind(rewind_args);
    if (stats_cmd->parsed()) return run_stats(stats_args);
    if (export_cmd->parsed()) return run_export(export_args);
  } catch (const CLI::ValidationError& e) {
    fmt::print(stderr, "{}\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    // Sandbox, backend, filesystem, and data-format failures: the
    // environment is not set up for this run.
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 1;
}

}  // namespace sqlfix
