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
//
// Collects passing trajectories over a task set under four strategies:
// plain greedy rollouts, plan-guided rollouts (a repair plan inferred
// backward from the known fix, then discarded from the stored trace),
// and rejection-sampled variants of both. Includes accounting, resumable
// checkpoints, and chat-format training export.

#ifndef SQLFIX_FACTORY_HPP_
#define SQLFIX_FACTORY_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sqlfix/agent.hpp"
#include "sqlfix/domain.hpp"
#include "sqlfix/evaluator.hpp"
#include "sqlfix/llm.hpp"
#include "sqlfix/prompts.hpp"
#include "sqlfix/sandbox.hpp"

namespace sqlfix {

enum class StrategyKind { kBaseline, kFPlan, kRejection, kRejectFPlan };

std::string to_string(StrategyKind k);
std::optional<StrategyKind> strategy_from_string(const std::string& s);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::kBaseline;
  int max_tries = 1;
  double temperature = 0.0;
  bool early_stop = true;

  // Baseline/FPlan: one greedy try. Rejection/RejectFPlan: up to five
  // sampled tries at temperature 0.8, stopping at the first pass.
  static StrategyConfig defaults(StrategyKind kind);
};

struct CostModel {
  double usd_per_1k_tokens_in = 0.0;
  double usd_per_1k_tokens_out = 0.0;
};

struct CollectionReport {
  std::string strategy;
  int n_instances = 0;
  int successful_traj = 0;
  std::int64_t total_tries = 0;
  double avg_tries = 0.0;  // total tries / n_instances
  std::int64_t db_time_ms = 0;       // engine time of the queries alone
  std::int64_t episode_time_ms = 0;  // wall time of whole episodes
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  double cost_usd = 0.0;
};

// Plans never enter the stored trajectory; they live in this sidecar.
struct PlanRecord {
  std::string task_id;
  FunctionalPlan plan;
};

struct CollectOptions {
  StrategyConfig strategy;
  AgentConfig agent;
  EvalOptions eval;
  CostModel cost;
  int plan_budget_tokens = 12;  // per plan step, surfaced in the prompt
  // Non-empty: JSONL file appended per finished instance; an interrupted
  // run resumes past the instances already recorded.
  std::filesystem::path checkpoint;
};

struct CollectResult {
  std::vector<Trajectory> trajectories;  // passing only, at most 1/instance
  std::vector<PlanRecord> plans;
  CollectionReport report;
  bool complete = true;  // false: backend outage; checkpoint resumes
  std::string failure;
};

// Plain non-empty lines survive; numbering and bullet markers are
// stripped. Zero steps is a parse failure.
ParseOutcome<FunctionalPlan> parse_plan(const std::string& text);

// Teacher derives the abstract repair plan from the issue and its known
// fix. One corrective re-ask; a second parse failure skips the instance.
// The fix itself never enters any later rollout prompt.
ParseOutcome<FunctionalPlan> backward_infer_plan(const TaskInstance& task,
                                                 const std::string& schema_text,
                                                 Backend& teacher,
                                                 const PromptSet& prompts,
                                                 const CollectOptions& options,
                                                 TokenCounter* tokens);

struct ValidationResult {
  std::optional<Trajectory> trajectory;  // set only on pass
  std::string stage;  // "episode" | "no final sql" | "evaluation" on reject
  EpisodeResult episode;
};

// One plan-guided greedy rollout on a fresh session, then evaluation of
// the produced fix. The stored trace keeps the steps, not the plan.
ValidationResult forward_validate(Sandbox& sandbox, const TaskInstance& task,
                                  const FunctionalPlan& plan,
                                  const AgentBackends& backends,
                                  const CollectOptions& options,
                                  const PromptSet& prompts);

// Full collection pass over the dataset.
CollectResult collect(Sandbox& sandbox, const std::vector<TaskInstance>& tasks,
                      const AgentBackends& backends, const PromptSet& prompts,
                      const CollectOptions& options);

// Chat-format JSONL: a header record, then one record per trajectory with
// an assistant message per step (tagged thought+action), a user message
// per observation, and a final assistant message carrying the fix inside
// a ```sql fence. Throws std::invalid_argument on a non-passing
// trajectory.
void export_training(const std::vector<Trajectory>& trajectories,
                     const std::filesystem::path& out_path);

}  // namespace sqlfix

#endif  // SQLFIX_FACTORY_HPP_
