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

#include "sqlfix/factory.hpp"

#include <fstream>
#include <map>
#include <stdexcept>

#include <fmt/format.h>
#include "json.hpp"

#include "sqlfix/jsonio.hpp"
#include "sqlfix/sqltext.hpp"

namespace sqlfix {
namespace {

using nlohmann::json;

// What one instance contributed to the run; also the checkpoint record.
struct InstanceOutcome {
  int tries = 0;
  std::int64_t db_ms = 0;
  std::int64_t episode_ms = 0;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  std::optional<Trajectory> kept;
  std::optional<FunctionalPlan> plan;
};

json outcome_to_json(const std::string& task_id, const InstanceOutcome& o) {
  json j;
  j["task_id"] = task_id;
  j["tries"] = o.tries;
  j["db_ms"] = o.db_ms;
  j["episode_ms"] = o.episode_ms;
  j["tokens_in"] = o.tokens_in;
  j["tokens_out"] = o.tokens_out;
  j["trajectory"] =
      o.kept.has_value() ? jsonio::trajectory_to_json(*o.kept) : json();
  j["plan"] = o.plan.has_value() ? jsonio::plan_to_json(*o.plan) : json();
  return j;
}

InstanceOutcome outcome_from_json(const json& j) {
  InstanceOutcome o;
  o.tries = j.at("tries").get<int>();
  o.db_ms = j.at("db_ms").get<std::int64_t>();
  o.episode_ms = j.at("episode_ms").get<std::int64_t>();
  o.tokens_in = j.at("tokens_in").get<std::int64_t>();
  o.tokens_out = j.at("tokens_out").get<std::int64_t>();
  if (j.contains("trajectory") && !j.at("trajectory").is_null()) {
    o.kept = jsonio::trajectory_from_json(j.at("trajectory"));
  }
  if (j.contains("plan") && !j.at("plan").is_null()) {
    o.plan = jsonio::plan_from_json(j.at("plan"));
  }
  return o;
}

std::map<std::string, InstanceOutcome> load_checkpoint(
    const std::filesystem::path& path) {
  std::map<std::string, InstanceOutcome> done;
  if (path.empty() || !std::filesystem::exists(path)) return done;
  std::ifstream in(path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (sqltext::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw jsonio::JsonError(fmt::format("{}:{}: bad checkpoint record: {}",
                                          path.string(), line_no, e.what()));
    }
    done[j.at("task_id").get<std::string>()] = outcome_from_json(j);
  }
  return done;
}

std::string join_sql(const std::vector<std::string>& stmts) {
  std::string out;
  for (const auto& s : stmts) {
    if (!out.empty()) out += ";\n";
    out += s;
  }
  if (!out.empty()) out += ";";
  return out;
}

}  // namespace

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::kBaseline:
      return "Baseline";
    case StrategyKind::kFPlan:
      return "FPlan";
    case StrategyKind::kRejection:
      return "Rejection";
    case StrategyKind::kRejectFPlan:
      return "RejectFPlan";
  }
  return "Baseline";
}

std::optional<StrategyKind> strategy_from_string(const std::string& s) {
  if (s == "Baseline") return StrategyKind::kBaseline;
  if (s == "FPlan") return StrategyKind::kFPlan;
  if (s == "Rejection") return StrategyKind::kRejection;
  if (s == "RejectFPlan") return StrategyKind::kRejectFPlan;
  return std::nullopt;
}

StrategyConfig StrategyConfig::defaults(StrategyKind kind) {
  StrategyConfig c;
  c.kind = kind;
  if (kind == StrategyKind::kRejection || kind == StrategyKind::kRejectFPlan) {
    c.max_tries = 5;
    c.temperature = 0.8;
    c.early_stop = true;
  } else {
    c.max_tries = 1;
    c.temperature = 0.0;
    c.early_stop = true;
  }
  return c;
}

ParseOutcome<FunctionalPlan> parse_plan(const std::string& text) {
  FunctionalPlan plan;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    std::string line = end == std::string::npos
                           ? text.substr(start)
                           : text.substr(start, end - start);
    start = end == std::string::npos ? text.size() + 1 : end + 1;
    std::string t = sqltext::trim(line);
    if (t.empty()) continue;
    // Strip "3." / "3)" / "-" / "*" markers.
    std::size_t i = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) {
      ++i;
    }
    if (i > 0 && i < t.size() && (t[i] == '.' || t[i] == ')')) {
      t = sqltext::trim(t.substr(i + 1));
    } else if (t[0] == '-' || t[0] == '*') {
      t = sqltext::trim(t.substr(1));
    }
    if (!t.empty()) plan.steps.push_back(t);
  }
  if (plan.steps.empty()) {
    return ParseOutcome<FunctionalPlan>::failure("plan has no steps", text);
  }
  return ParseOutcome<FunctionalPlan>::success(std::move(plan));
}

ParseOutcome<FunctionalPlan> backward_infer_plan(const TaskInstance& task,
                                                 const std::string& schema_text,
                                                 Backend& teacher,
                                                 const PromptSet& prompts,
                                                 const CollectOptions& options,
                                                 TokenCounter* tokens) {
  std::string prompt = render_template(
      prompts.plan_infer,
      {{"SCHEMA", schema_text},
       {"USER_ISSUE", task.user_query},
       {"ISSUE_SQL", join_sql(task.issue_sql)},
       {"SOLUTION_SQL", join_sql(task.solution_sql)},
       {"budget", fmt::format("{}", options.plan_budget_tokens)}});
  std::vector<ChatMessage> messages{{"user", prompt}};
  ParseOutcome<FunctionalPlan> parsed =
      ParseOutcome<FunctionalPlan>::failure("no reply", "");
  for (int attempt = 0; attempt < 2; ++attempt) {
    CompletionRequest request;
    request.messages = messages;
    request.temperature = 0.0;
    request.max_tokens = options.agent.max_tokens;
    Completion c = teacher.complete(request);
    if (tokens != nullptr) {
      tokens->in += c.tokens_in;
      tokens->out += c.tokens_out;
    }
    parsed = parse_plan(c.text);
    if (parsed.ok()) return parsed;
    if (attempt == 0) {
      messages.push_back({"assistant", c.text});
      messages.push_back(
          {"user",
           "That was not a usable plan. Reply with a numbered list of "
           "repair operations, one per line, at least one line."});
    }
  }
  return parsed;
}

namespace {

// One rollout plus evaluation. Throws BackendError upward so a dead
// teacher aborts the run as resumable rather than scoring zeros.
Trajectory run_try(Sandbox& sandbox, const TaskInstance& task,
                   Session& session, const AgentBackends& backends,
                   const PromptSet& prompts, const CollectOptions& options,
                   const std::optional<FunctionalPlan>& plan,
                   double temperature, int try_index,
                   InstanceOutcome* inst) {
  AgentConfig cfg = options.agent;
  cfg.plan_hint = plan;
  cfg.temperature = temperature;
  EpisodeResult ep = run_episode(sandbox, task, session, backends, cfg,
                                 prompts);
  inst->tries += 1;
  inst->db_ms += ep.db_ms;
  inst->episode_ms += ep.trajectory.wall_ms;
  inst->tokens_in += ep.trajectory.tokens_in;
  inst->tokens_out += ep.trajectory.tokens_out;
  if (ep.failure.has_value()) throw BackendError(*ep.failure);

  Trajectory traj = std::move(ep.trajectory);
  traj.strategy = to_string(options.strategy.kind);
  traj.tries_used = try_index;
  if (traj.final_sql.has_value()) {
    std::vector<std::string> stmts =
        sqltext::split_statements(*traj.final_sql);
    if (!stmts.empty()) {
      traj.passed = evaluate_task(sandbox, task, stmts, options.eval).passed;
    } else {
      traj.final_sql.reset();
    }
  }
  return traj;
}

}  // namespace

ValidationResult forward_validate(Sandbox& sandbox, const TaskInstance& task,
                                  const FunctionalPlan& plan,
                                  const AgentBackends& backends,
                                  const CollectOptions& options,
                                  const PromptSet& prompts) {
  ValidationResult out;
  auto session = sandbox.open_session(task, options.eval.isolation);
  AgentConfig cfg = options.agent;
  cfg.plan_hint = plan;
  cfg.temperature = 0.0;
  out.episode = run_episode(sandbox, task, *session, backends, cfg, prompts);
  sandbox.close_session(*session);
  if (out.episode.failure.has_value()) {
    out.stage = "episode";
    return out;
  }
  Trajectory traj = out.episode.trajectory;
  if (!traj.final_sql.has_value()) {
    out.stage = "no final sql";
    return out;
  }
  std::vector<std::string> stmts = sqltext::split_statements(*traj.final_sql);
  if (stmts.empty()) {
    out.stage = "no final sql";
    return out;
  }
  traj.strategy = to_string(StrategyKind::kFPlan);
  traj.passed = evaluate_task(sandbox, task, stmts, options.eval).passed;
  if (!*traj.passed) {
    out.stage = "evaluation";
    return out;
  }
  out.trajectory = std::move(traj);
  return out;
}

CollectResult collect(Sandbox& sandbox, const std::vector<TaskInstance>& tasks,
                      const AgentBackends& backends, const PromptSet& prompts,
                      const CollectOptions& options) {
  if (tasks.empty()) throw std::invalid_argument("dataset is empty");
  const StrategyConfig& strat = options.strategy;
  bool wants_plan = strat.kind == StrategyKind::kFPlan ||
                    strat.kind == StrategyKind::kRejectFPlan;

  CollectResult out;
  out.report.strategy = to_string(strat.kind);
  out.report.n_instances = static_cast<int>(tasks.size());

  std::map<std::string, InstanceOutcome> done =
      load_checkpoint(options.checkpoint);
  std::ofstream ckpt;
  if (!options.checkpoint.empty()) {
    ckpt.open(options.checkpoint, std::ios::app);
    if (!ckpt) {
      throw jsonio::JsonError(fmt::format("cannot write checkpoint {}",
                                          options.checkpoint.string()));
    }
  }

  auto absorb = [&](const std::string& task_id, const InstanceOutcome& inst) {
    out.report.total_tries += inst.tries;
    out.report.db_time_ms += inst.db_ms;
    out.report.episode_time_ms += inst.episode_ms;
    out.report.tokens_in += inst.tokens_in;
    out.report.tokens_out += inst.tokens_out;
    if (inst.kept.has_value()) {
      out.report.successful_traj += 1;
      out.trajectories.push_back(*inst.kept);
    }
    if (inst.plan.has_value()) {
      out.plans.push_back({task_id, *inst.plan});
    }
  };

  for (const auto& task : tasks) {
    auto it = done.find(task.task_id);
    if (it != done.end()) {
      absorb(task.task_id, it->second);
      continue;
    }

    InstanceOutcome inst;
    try {
      auto session = sandbox.open_session(task, options.eval.isolation);
      std::string schema = sandbox.schema_text(*session);

      std::optional<FunctionalPlan> plan;
      bool plan_skip = false;
      if (wants_plan) {
        Backend& teacher = options.agent.gtm && backends.thought_model
                               ? *backends.thought_model
                               : *backends.model;
        TokenCounter tc;
        auto inferred = backward_infer_plan(task, schema, teacher, prompts,
                                            options, &tc);
        inst.tokens_in += tc.in;
        inst.tokens_out += tc.out;
        if (inferred.ok()) {
          plan = *inferred.value;
          inst.plan = plan;
        } else {
          plan_skip = true;  // instance charged zero tries
        }
      }

      if (!plan_skip) {
        for (int try_i = 1; try_i <= strat.max_tries; ++try_i) {
          if (try_i > 1) sandbox.reset(*session);
          double temperature = strat.temperature;
          if (strat.kind == StrategyKind::kRejectFPlan && try_i == 1) {
            temperature = 0.0;  // the plan-guided first attempt is greedy
          }
          Trajectory traj =
              run_try(sandbox, task, *session, backends, prompts, options,
                      plan, temperature, try_i, &inst);
          bool passed = traj.passed.value_or(false);
          if (passed && !inst.kept.has_value()) {
            inst.kept = std::move(traj);
            if (strat.early_stop) break;
          }
        }
      }
      sandbox.close_session(*session);
    } catch (const BackendError& e) {
      out.complete = false;
      out.failure = e.what();
      break;
    }

    absorb(task.task_id, inst);
    if (ckpt.is_open()) {
      ckpt << outcome_to_json(task.task_id, inst).dump() << "\n";
      ckpt.flush();
    }
  }

  if (out.report.n_instances > 0) {
    out.report.avg_tries = static_cast<double>(out.report.total_tries) /
                           static_cast<double>(out.report.n_instances);
  }
  out.report.cost_usd =
      (static_cast<double>(out.report.tokens_in) / 1000.0) *
          options.cost.usd_per_1k_tokens_in +
      (static_cast<double>(out.report.tokens_out) / 1000.0) *
          options.cost.usd_per_1k_tokens_out;
  return out;
}

void export_training(const std::vector<Trajectory>& trajectories,
                     const std::filesystem::path& out_path) {
  for (const auto& traj : trajectories) {
    if (!traj.passed.value_or(false) || !traj.final_sql.has_value()) {
      throw std::invalid_argument(
          fmt::format("non-passing trajectory rejected: {}", traj.task_id));
    }
  }
  std::string body;
  json header;
  header["format"] = "sqlfix-chat-v1";
  header["version"] = 1;
  header["records"] = static_cast<int>(trajectories.size());
  body += header.dump();
  body += "\n";
  for (const auto& traj : trajectories) {
    json rec;
    rec["task_id"] = traj.task_id;
    rec["strategy"] = traj.strategy;
    json messages = json::array();
    for (const auto& step : traj.steps) {
      json assistant;
      assistant["role"] = "assistant";
      assistant["content"] = "<thought>" + step.thought + "</thought>\n" +
                             "<action>" + step.action + "</action>";
      messages.push_back(assistant);
      if (!step.observation.empty()) {
        json user;
        user["role"] = "user";
        user["content"] = step.observation;
        messages.push_back(user);
      }
    }
    json final_msg;
    final_msg["role"] = "assistant";
    final_msg["content"] = "```sql\n" + *traj.final_sql + "\n```";
    messages.push_back(final_msg);
    rec["messages"] = messages;
    body += rec.dump();
    body += "\n";
  }
  jsonio::write_text_file(out_path, body);
}

}  // namespace sqlfix
