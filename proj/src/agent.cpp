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

#include "sqlfix/agent.hpp"

#include <chrono>
#include <limits>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

#include "sqlfix/sqltext.hpp"

namespace sqlfix {
namespace {

constexpr const char* kMalformed = "(malformed)";

std::string join_sql(const std::vector<std::string>& stmts) {
  std::string out;
  for (const auto& s : stmts) {
    std::string t = sqltext::trim(s);
    if (t.empty()) continue;
    if (!out.empty()) out += "\n";
    out += t;
    if (t.back() != ';') out += ';';
  }
  return out;
}

std::string knowledge_block(const TaskInstance& task) {
  if (task.knowledge_tags.empty()) return "";
  std::string out = "Relevant knowledge: ";
  for (std::size_t i = 0; i < task.knowledge_tags.size(); ++i) {
    if (i) out += ", ";
    out += task.knowledge_tags[i];
  }
  out += "\n\n";
  return out;
}

std::string plan_block(const std::optional<FunctionalPlan>& plan) {
  if (!plan || plan->steps.empty()) return "";
  std::string out = "Repair plan to follow:\n";
  for (std::size_t i = 0; i < plan->steps.size(); ++i) {
    out += fmt::format("{}. {}\n", i + 1, plan->steps[i]);
  }
  out += "\n";
  return out;
}

std::string render_step(const Step& step) {
  std::string block = "<thought>" + step.thought + "</thought>\n<action>" +
                      step.action + "</action>";
  if (!step.observation.empty()) {
    block += "\nObservation:\n" + step.observation;
  }
  return block;
}

Completion ask(Backend& backend, std::vector<ChatMessage> messages,
               const AgentConfig& config, TokenCounter* tokens) {
  CompletionRequest request;
  request.messages = std::move(messages);
  request.temperature = config.temperature;
  request.max_tokens = config.max_tokens;
  Completion c = backend.complete(request);
  if (tokens != nullptr) {
    tokens->in += c.tokens_in;
    tokens->out += c.tokens_out;
  }
  return c;
}

std::map<std::string, std::string> turn_vars(const TaskInstance& task,
                                             const std::string& schema_text,
                                             const std::string& history,
                                             const AgentConfig& config,
                                             int turns_left) {
  return {
      {"db_id", task.db_ref},
      {"SCHEMA", schema_text},
      {"USER_ISSUE", task.user_query},
      {"ISSUE_SQL", join_sql(task.issue_sql)},
      {"knowledge", knowledge_block(task)},
      {"plan", plan_block(config.plan_hint)},
      {"history", history},
      {"turn", fmt::format("{}", turns_left)},
  };
}

std::string corrective_message(const ParseError& err) {
  return fmt::format(
      "Your reply was malformed ({}). Reply again with exactly one "
      "<thought>...</thought> followed by one <action>...</action>.",
      err.message);
}

// Single-model turn proposal: one completion, one corrective re-ask. A
// thought that parsed is kept even when the action did not.
TurnProposal propose_single(const std::vector<Step>& history,
                            const TaskInstance& task,
                            const std::string& schema_text,
                            const PromptSet& prompts, Backend& model,
                            const AgentConfig& config, int turns_left,
                            TokenCounter* tokens) {
  const std::string& tpl = config.mode == AgentMode::kToolAct
                               ? prompts.toolact_turn
                               : prompts.sqlact_turn;
  std::string prompt = render_template(
      tpl, turn_vars(task, schema_text,
                     render_history(history, config.history_char_budget),
                     config, turns_left));
  std::vector<ChatMessage> messages{{"user", prompt}};
  std::string salvaged_thought;
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    Completion c = ask(model, messages, config, tokens);
    auto th = parse_tagged(c.text, "thought");
    auto ac = parse_tagged(c.text, "action");
    if (th.ok()) salvaged_thought = *th.value;
    if (th.ok() && ac.ok()) {
      return TurnProposal{*th.value, *ac.value, false, ""};
    }
    const ParseError& err = th.ok() ? *ac.error : *th.error;
    last_error = err.message;
    if (attempt == 0) {
      messages.push_back({"assistant", c.text});
      messages.push_back({"user", corrective_message(err)});
    }
  }
  TurnProposal p;
  p.thought = salvaged_thought.empty() ? kMalformed : salvaged_thought;
  p.action = kMalformed;
  p.malformed = true;
  p.error = last_error;
  return p;
}

struct ToolCall {
  enum class Kind { kSchema, kSample, kSolution, kUnknown };
  Kind kind = Kind::kUnknown;
  std::string arg;
};

// Accepts "Tool(arg)" and "Tool: arg" spellings, case-insensitively.
ToolCall parse_tool(const std::string& action) {
  std::string text = sqltext::trim(action);
  std::string lower = sqltext::to_lower(text);
  auto arg_after = [&](std::size_t prefix_len) -> std::optional<std::string> {
    std::string rest = sqltext::trim(text.substr(prefix_len));
    if (!rest.empty() && rest.front() == '(') {
      std::size_t close = rest.rfind(')');
      if (close == std::string::npos) return std::nullopt;
      return sqltext::trim(rest.substr(1, close - 1));
    }
    if (!rest.empty() && rest.front() == ':') {
      return sqltext::trim(rest.substr(1));
    }
    return std::nullopt;
  };
  ToolCall call;
  if (lower.rfind("schema inspection", 0) == 0) {
    auto arg = arg_after(std::string("schema inspection").size());
    if (arg && !arg->empty()) {
      call.kind = ToolCall::Kind::kSchema;
      call.arg = *arg;
    }
  } else if (lower.rfind("sample data", 0) == 0) {
    auto arg = arg_after(std::string("sample data").size());
    if (arg && !arg->empty()) {
      call.kind = ToolCall::Kind::kSample;
      call.arg = *arg;
    }
  } else if (lower.rfind("solution query", 0) == 0) {
    auto arg = arg_after(std::string("solution query").size());
    if (arg && !arg->empty()) {
      call.kind = ToolCall::Kind::kSolution;
      call.arg = *arg;
    }
  }
  return call;
}

std::string quote_ident(const std::string& name) {
  std::string out = "\"";
  for (char ch : name) {
    out += ch;
    if (ch == '"') out += '"';
  }
  out += "\"";
  return out;
}

}  // namespace

std::string to_string(AgentMode m) {
  return m == AgentMode::kToolAct ? "ToolAct" : "SqlAct";
}

std::optional<AgentMode> agent_mode_from_string(const std::string& s) {
  if (s == "SqlAct") return AgentMode::kSqlAct;
  if (s == "ToolAct") return AgentMode::kToolAct;
  return std::nullopt;
}

std::string render_history(const std::vector<Step>& steps, int char_budget) {
  if (steps.empty()) return "(none yet)";
  std::vector<std::string> blocks;
  blocks.reserve(steps.size());
  for (const auto& step : steps) blocks.push_back(render_step(step));

  // Keep a suffix of the blocks that fits; the latest turn always stays.
  std::size_t first = 0;
  auto total = [&]() {
    std::size_t n = 0;
    for (std::size_t i = first; i < blocks.size(); ++i) {
      n += blocks[i].size() + (i > first ? 2 : 0);
    }
    return n;
  };
  while (first + 1 < blocks.size() &&
         total() > static_cast<std::size_t>(char_budget)) {
    ++first;
  }
  std::string out;
  if (first > 0) {
    out = fmt::format("[{} earlier turns elided]\n\n", first);
  }
  for (std::size_t i = first; i < blocks.size(); ++i) {
    if (i > first) out += "\n\n";
    out += blocks[i];
  }
  return out;
}

TurnProposal gtm_step(const std::vector<Step>& history,
                      const TaskInstance& task,
                      const std::string& schema_text,
                      const PromptSet& prompts, Backend& thought_model,
                      Backend& action_model, const AgentConfig& config,
                      int turns_left, TokenCounter* tokens) {
  std::string rendered_history =
      render_history(history, config.history_char_budget);

  // The thought model sees the full turn prompt. Its action slot is
  // intentionally ignored, so only the thought has to parse.
  std::string thought_prompt = render_template(
      prompts.sqlact_turn,
      turn_vars(task, schema_text, rendered_history, config, turns_left));
  std::vector<ChatMessage> messages{{"user", thought_prompt}};
  std::string thought;
  bool thought_ok = false;
  std::string last_error;
  for (int attempt = 0; attempt < 2 && !thought_ok; ++attempt) {
    Completion c = ask(thought_model, messages, config, tokens);
    auto th = parse_tagged(c.text, "thought");
    if (th.ok()) {
      thought = *th.value;
      thought_ok = true;
      break;
    }
    last_error = th.error->message;
    if (attempt == 0) {
      messages.push_back({"assistant", c.text});
      messages.push_back(
          {"user", corrective_message(*th.error)});
    }
  }
  if (!thought_ok) {
    return TurnProposal{kMalformed, kMalformed, true, last_error};
  }

  std::string action_prompt =
      render_template(prompts.action_only,
                      {{"db_id", task.db_ref},
                       {"SCHEMA", schema_text},
                       {"USER_ISSUE", task.user_query},
                       {"history", rendered_history},
                       {"thought", thought}});
  messages = {{"user", action_prompt}};
  for (int attempt = 0; attempt < 2; ++attempt) {
    Completion c = ask(action_model, messages, config, tokens);
    auto ac = parse_tagged(c.text, "action");
    if (ac.ok()) {
      return TurnProposal{thought, *ac.value, false, ""};
    }
    last_error = ac.error->message;
    if (attempt == 0) {
      messages.push_back({"assistant", c.text});
      messages.push_back(
          {"user", fmt::format("Your reply was malformed ({}). Reply again "
                               "with exactly one <action>...</action>.",
                               ac.error->message)});
    }
  }
  return TurnProposal{thought, kMalformed, true, last_error};
}

ParseOutcome<std::string> synthesize_final(const TaskInstance& task,
                                           const std::vector<Step>& steps,
                                           const std::string& schema_text,
                                           const PromptSet& prompts,
                                           Backend& model,
                                           const AgentConfig& config,
                                           TokenCounter* tokens) {
  (void)schema_text;
  // The synthesis prompt gets the whole chain; per-turn budgets do not
  // apply here.
  std::string prompt = render_template(
      prompts.final_answer,
      {{"db_id", task.db_ref},
       {"USER_ISSUE", task.user_query},
       {"ISSUE_SQL", join_sql(task.issue_sql)},
       {"history",
        render_history(steps, std::numeric_limits<int>::max())}});
  std::vector<ChatMessage> messages{{"user", prompt}};
  ParseOutcome<std::string> parsed =
      ParseOutcome<std::string>::failure("no reply", "");
  for (int attempt = 0; attempt < 2; ++attempt) {
    Completion c = ask(model, messages, config, tokens);
    parsed = extract_sql_fence(c.text);
    if (parsed.ok()) return parsed;
    if (attempt == 0) {
      messages.push_back({"assistant", c.text});
      messages.push_back(
          {"user",
           "Your reply had no ```sql fence. Reply again with the final SQL "
           "wrapped in a ```sql fence."});
    }
  }
  return parsed;
}

EpisodeResult run_episode(Sandbox& sandbox, const TaskInstance& task,
                          Session& session, const AgentBackends& backends,
                          const AgentConfig& config,
                          const PromptSet& prompts) {
  if (!backends.model) {
    throw std::invalid_argument("agent needs a backend");
  }
  if (config.gtm && !backends.thought_model) {
    throw std::invalid_argument("gtm needs a thought model");
  }
  auto started = std::chrono::steady_clock::now();
  std::int64_t db_start = session.db_ms;

  EpisodeResult result;
  Trajectory& traj = result.trajectory;
  traj.task_id = task.task_id;
  traj.tries_used = 1;
  TokenCounter tokens;
  std::string schema = sandbox.schema_text(session);
  bool solution_submitted = false;

  try {
    for (int i = 1; i <= config.max_turns; ++i) {
      int turns_left = config.max_turns - i + 1;
      TurnProposal p =
          (config.gtm && config.mode == AgentMode::kSqlAct)
              ? gtm_step(traj.steps, task, schema, prompts,
                         *backends.thought_model, *backends.model, config,
                         turns_left, &tokens)
              : propose_single(traj.steps, task, schema, prompts,
                               *backends.model, config, turns_left, &tokens);
      if (p.malformed) {
        // The turn is spent; the unparseable action never reaches the
        // database.
        traj.steps.push_back(Step{p.thought, kMalformed, "malformed output"});
        continue;
      }
      if (p.action == kDoneSentinel) {
        traj.steps.push_back(Step{p.thought, kDoneSentinel, ""});
        break;
      }

      std::string observation;
      if (config.mode == AgentMode::kSqlAct) {
        ExecObservation obs = sandbox.execute(session, p.action, config.limits);
        observation = render_observation(obs, config.limits.char_cap);
      } else {
        ToolCall call = parse_tool(p.action);
        switch (call.kind) {
          case ToolCall::Kind::kSchema: {
            std::string ddl = sandbox.table_ddl(session, call.arg);
            observation = ddl.empty()
                              ? fmt::format("no such table: {}", call.arg)
                              : ddl;
            break;
          }
          case ToolCall::Kind::kSample: {
            std::string sql =
                fmt::format("SELECT * FROM {} LIMIT {}",
                            quote_ident(call.arg), config.limits.row_cap);
            ExecObservation obs = sandbox.execute(session, sql, config.limits);
            observation = render_observation(obs, config.limits.char_cap);
            break;
          }
          case ToolCall::Kind::kSolution: {
            traj.final_sql = call.arg;
            solution_submitted = true;
            observation = "final solution recorded";
            break;
          }
          case ToolCall::Kind::kUnknown:
            observation = "unknown tool";
            break;
        }
      }
      traj.steps.push_back(Step{p.thought, p.action, observation});
      if (solution_submitted) break;
    }

    if (!solution_submitted) {
      auto sql = synthesize_final(task, traj.steps, schema, prompts,
                                  *backends.model, config, &tokens);
      if (sql.ok()) traj.final_sql = *sql.value;
    }
  } catch (const BackendError& e) {
    // Keep whatever steps completed; the episode is reported as failed
    // infrastructure, not as a wrong answer.
    result.failure = e.what();
  }

  traj.tokens_in = tokens.in;
  traj.tokens_out = tokens.out;
  traj.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - started)
                     .count();
  result.db_ms = session.db_ms - db_start;
  return result;
}

EpisodeResult run_toolact_episode(Sandbox& sandbox, const TaskInstance& task,
                                  Session& session,
                                  const AgentBackends& backends,
                                  const AgentConfig& config,
                                  const PromptSet& prompts) {
  AgentConfig tool_config = config;
  tool_config.mode = AgentMode::kToolAct;
  tool_config.gtm = false;
  tool_config.plan_hint.reset();
  return run_episode(sandbox, task, session, backends, tool_config, prompts);
}

}  // namespace sqlfix
