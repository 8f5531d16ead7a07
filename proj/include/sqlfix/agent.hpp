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
// The debugging agent: a think/act loop whose actions are SQL statements
// executed in a sandbox session, plus a tool-restricted baseline. Ends on
// the DONE sentinel or turn exhaustion, then synthesizes the final fix.

#ifndef SQLFIX_AGENT_HPP_
#define SQLFIX_AGENT_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sqlfix/domain.hpp"
#include "sqlfix/llm.hpp"
#include "sqlfix/prompts.hpp"
#include "sqlfix/sandbox.hpp"

namespace sqlfix {

enum class AgentMode { kSqlAct, kToolAct };

std::string to_string(AgentMode m);
std::optional<AgentMode> agent_mode_from_string(const std::string& s);

struct AgentConfig {
  int max_turns = 5;
  AgentMode mode = AgentMode::kSqlAct;
  // Dual-model routing: one model supplies the thought, the other the SQL
  // action. Requires backends.thought_model.
  bool gtm = false;
  std::optional<FunctionalPlan> plan_hint;  // SqlAct only
  std::string prompt_set = "default";
  ExecLimits limits;
  double temperature = 0.0;
  int max_tokens = 2048;
  int history_char_budget = 6000;
};

struct AgentBackends {
  std::shared_ptr<Backend> model;          // everything, outside gtm
  std::shared_ptr<Backend> thought_model;  // gtm only; its actions are discarded
};

struct TokenCounter {
  std::int64_t in = 0;
  std::int64_t out = 0;
};

struct TurnProposal {
  std::string thought;  // parsed thought, or "(malformed)"
  std::string action;   // SQL, tool invocation, or kDoneSentinel
  // A proposal that failed to parse after one re-ask. The turn is consumed;
  // the action is never executed.
  bool malformed = false;
  std::string error;  // parse failure reason, when malformed
};

struct EpisodeResult {
  Trajectory trajectory;
  std::int64_t db_ms = 0;  // engine time spent by this episode's queries
  std::optional<std::string> failure;  // backend outage; steps are retained
};

// Steps rendered oldest first, blank-line separated. Oldest tuples are
// elided first when over budget; elision leaves a head marker. Pure.
std::string render_history(const std::vector<Step>& steps, int char_budget);

// One dual-model turn: the thought model proposes, its action is thrown
// away, and the action model generates the action from history plus that
// thought. Parse failures on either side follow the one-re-ask policy and
// come back as a malformed proposal.
TurnProposal gtm_step(const std::vector<Step>& history,
                      const TaskInstance& task,
                      const std::string& schema_text,
                      const PromptSet& prompts, Backend& thought_model,
                      Backend& action_model, const AgentConfig& config,
                      int turns_left, TokenCounter* tokens);

// Final-answer synthesis over the full step chain. One re-ask on a fence
// parse failure; a failed outcome leaves final_sql unset.
ParseOutcome<std::string> synthesize_final(const TaskInstance& task,
                                           const std::vector<Step>& steps,
                                           const std::string& schema_text,
                                           const PromptSet& prompts,
                                           Backend& model,
                                           const AgentConfig& config,
                                           TokenCounter* tokens);

// Runs one episode over an open session. The session is reset by the
// caller between attempts; this function does not reset. The returned
// trajectory has passed unset; evaluation is a separate step.
EpisodeResult run_episode(Sandbox& sandbox, const TaskInstance& task,
                          Session& session, const AgentBackends& backends,
                          const AgentConfig& config, const PromptSet& prompts);

// Tool-restricted baseline: Schema Inspection, Sample Data, and Solution
// Query (which sets final_sql and ends the episode).
EpisodeResult run_toolact_episode(Sandbox& sandbox, const TaskInstance& task,
                                  Session& session,
                                  const AgentBackends& backends,
                                  const AgentConfig& config,
                                  const PromptSet& prompts);

}  // namespace sqlfix

#endif  // SQLFIX_AGENT_HPP_
