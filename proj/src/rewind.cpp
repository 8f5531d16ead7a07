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

#include "sqlfix/rewind.hpp"

#include <map>
#include <stdexcept>

#include <fmt/format.h>
#include "json.hpp"

#include "sqlfix/evaluator.hpp"
#include "sqlfix/sqltext.hpp"

namespace sqlfix {
namespace {

using nlohmann::json;

bool starts_with_sql_keyword(const std::string& text) {
  static const std::set<std::string> kw = {
      "select", "insert", "update", "delete", "create", "alter",
      "drop",   "with",   "replace", "truncate", "merge"};
  return kw.count(sqltext::leading_keyword(text)) > 0;
}

void push_unique(std::vector<std::string>* spans, std::string span) {
  span = sqltext::trim(span);
  if (span.empty()) return;
  for (const auto& existing : *spans) {
    if (existing == span) return;
  }
  spans->push_back(std::move(span));
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

std::string ask(Backend& backend, const std::string& prompt,
                const RewindConfig& config, std::int64_t* tokens_in,
                std::int64_t* tokens_out) {
  CompletionRequest request;
  request.messages = {{"user", prompt}};
  request.temperature = config.temperature;
  request.max_tokens = config.max_tokens;
  Completion c = backend.complete(request);
  if (tokens_in != nullptr) *tokens_in += c.tokens_in;
  if (tokens_out != nullptr) *tokens_out += c.tokens_out;
  return c.text;
}

bool first_line_is_yes(const std::string& reply) {
  std::string text = sqltext::trim(reply);
  std::size_t eol = text.find('\n');
  std::string first = sqltext::to_lower(
      sqltext::trim(eol == std::string::npos ? text : text.substr(0, eol)));
  return first.rfind("yes", 0) == 0;
}

// Minimal task shell for opening sessions and carrying candidates; only
// dialect/db_ref (and later the candidate fields) matter to the sandbox.
TaskInstance probe_task(const GymDatabase& db) {
  TaskInstance t;
  t.task_id = "rewind-probe-" + db.db_ref;
  t.dialect = db.dialect;
  t.db_ref = db.db_ref;
  t.category = Category::kQueryLike;
  t.user_query = "(pipeline probe)";
  t.issue_sql = {"SELECT 1"};
  t.solution_sql = {"SELECT 1"};
  TestCase ok;
  ok.kind = TestKind::kExecOk;
  t.eval_script.test_cases.push_back(ok);
  return t;
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

std::string script_text(const EvalScript& script) {
  return jsonio::eval_script_to_json(script).dump(2);
}

std::string fetch_schema(Sandbox& sandbox, const GymDatabase& db) {
  auto session = sandbox.open_session(probe_task(db));
  std::string schema = sandbox.schema_text(*session);
  sandbox.close_session(*session);
  return schema;
}

std::vector<std::string> string_list_field(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const json& v = j.at(key);
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& item : v) {
      if (item.is_string()) out.push_back(item.get<std::string>());
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> extract_sql_spans(const std::string& body) {
  std::vector<std::string> spans;

  // Fenced blocks. A "sql" info string is trusted; other fences count only
  // when their body opens with a SQL keyword.
  std::size_t pos = 0;
  while (true) {
    std::size_t open = body.find("```", pos);
    if (open == std::string::npos) break;
    std::size_t info_end = body.find('\n', open + 3);
    if (info_end == std::string::npos) break;
    std::string info = sqltext::to_lower(
        sqltext::trim(body.substr(open + 3, info_end - open - 3)));
    std::size_t close = body.find("```", info_end + 1);
    if (close == std::string::npos) break;
    std::string content = body.substr(info_end + 1, close - info_end - 1);
    if (info == "sql" || starts_with_sql_keyword(content)) {
      push_unique(&spans, content);
    }
    pos = close + 3;
  }

  // Indented code: contiguous runs of lines indented by four spaces or a
  // tab, outside fences. Cheap approximation of forum markup.
  std::string no_fences;
  {
    std::size_t p = 0;
    while (true) {
      std::size_t open = body.find("```", p);
      if (open == std::string::npos) {
        no_fences += body.substr(p);
        break;
      }
      no_fences += body.substr(p, open - p);
      std::size_t close = body.find("```", open + 3);
      if (close == std::string::npos) break;
      p = close + 3;
    }
  }
  std::vector<std::string> lines = split_lines(no_fences);
  std::string block;
  auto flush = [&]() {
    if (!block.empty() && starts_with_sql_keyword(block)) {
      push_unique(&spans, block);
    }
    block.clear();
  };
  for (const auto& line : lines) {
    bool indented = line.rfind("    ", 0) == 0 || line.rfind("\t", 0) == 0;
    if (indented) {
      std::string stripped =
          line[0] == '\t' ? line.substr(1) : line.substr(4);
      if (!block.empty()) block += "\n";
      block += stripped;
    } else if (sqltext::trim(line).empty()) {
      // Blank lines may sit inside one indented block; keep going.
      if (!block.empty()) block += "\n";
    } else {
      flush();
    }
  }
  flush();
  return spans;
}

ParseOutcome<std::string> adapt_sql(const std::string& sql,
                                    const std::string& schema_text,
                                    Backend& backend, const PromptSet& prompts,
                                    const RewindConfig& config,
                                    std::int64_t* tokens_in,
                                    std::int64_t* tokens_out) {
  std::string prompt = render_template(
      prompts.rewind_adapt, {{"SCHEMA", schema_text}, {"SQL", sql}});
  std::string reply = ask(backend, prompt, config, tokens_in, tokens_out);
  return extract_sql_fence(reply);
}

GateResult solution_gate(Sandbox& sandbox, Session& session,
                         const std::vector<std::string>& sql,
                         const ExecLimits& limits) {
  GateResult out;
  ExecObservation obs = sandbox.execute(session, join_sql(sql), limits);
  // Leave no trace for the next candidate.
  sandbox.reset(session);
  if (obs.status == ExecStatus::kError || obs.status == ExecStatus::kTimeout) {
    out.reason = fmt::format("exec error: {}", obs.error_text.value_or(""));
    return out;
  }
  if (obs.status != ExecStatus::kRows || obs.rows.empty()) {
    out.reason = "null result";
    return out;
  }
  bool non_null = false;
  for (const Value& v : obs.rows.front()) {
    if (!std::holds_alternative<std::monostate>(v)) non_null = true;
  }
  if (!non_null) {
    out.reason = "null result";
    return out;
  }
  out.ok = true;
  return out;
}

MineReport mine_solution_sql(const std::vector<CorpusPost>& corpus,
                             const GymDatabase& db, Sandbox& sandbox,
                             Backend& backend, const PromptSet& prompts,
                             const RewindConfig& config) {
  MineReport report;
  std::string schema = fetch_schema(sandbox, db);
  auto session = sandbox.open_session(probe_task(db));
  for (const auto& post : corpus) {
    std::vector<std::string> spans = extract_sql_spans(post.body);
    if (spans.empty()) {
      report.rejects.push_back(
          {post.source_id, db.db_ref, "extract", "no SQL spans"});
      continue;
    }
    for (const auto& span : spans) {
      auto adapted =
          adapt_sql(span, schema, backend, prompts, config, nullptr, nullptr);
      if (!adapted.ok()) {
        report.rejects.push_back({post.source_id, db.db_ref, "adapt",
                                  adapted.error->message});
        continue;
      }
      std::vector<std::string> stmts =
          sqltext::split_statements(*adapted.value);
      if (stmts.empty()) {
        report.rejects.push_back(
            {post.source_id, db.db_ref, "adapt", "empty SQL"});
        continue;
      }
      GateResult gate = solution_gate(sandbox, *session, stmts, config.limits);
      if (!gate.ok) {
        report.rejects.push_back(
            {post.source_id, db.db_ref, "gate", gate.reason});
        continue;
      }
      report.accepted.push_back({post.source_id, std::move(stmts)});
    }
  }
  sandbox.close_session(*session);
  return report;
}

IssueOutcome synthesize_issue(const std::vector<std::string>& solution_sql,
                              const GymDatabase& db, Sandbox& sandbox,
                              Backend& backend, const PromptSet& prompts,
                              const RewindConfig& config,
                              std::int64_t* tokens_in,
                              std::int64_t* tokens_out) {
  IssueOutcome out;
  std::string last = "no proposals";
  std::string schema = fetch_schema(sandbox, db);
  std::string solution_text = join_sql(solution_sql);

  for (int iteration = 1; iteration <= config.max_iter; ++iteration) {
    std::string reply =
        ask(backend,
            render_template(prompts.rewind_issue, {{"SCHEMA", schema},
                                                   {"SOLUTION_SQL",
                                                    solution_text}}),
            config, tokens_in, tokens_out);
    auto parsed = extract_json_object(reply);
    if (!parsed.ok()) {
      last = fmt::format("proposal parse failure: {}", parsed.error->message);
      continue;
    }
    const json& j = *parsed.value;

    TaskInstance candidate = probe_task(db);
    candidate.task_id = "rewind-candidate";
    candidate.solution_sql = solution_sql;
    candidate.issue_sql = string_list_field(j, "issue_sql");
    std::string reason;
    if (j.contains("issue_reason") && j.at("issue_reason").is_string()) {
      reason = j.at("issue_reason").get<std::string>();
    }
    candidate.issue_reason = reason;
    if (j.contains("category") && j.at("category").is_string()) {
      auto cat = category_from_string(j.at("category").get<std::string>());
      if (cat) candidate.category = *cat;
    }
    try {
      candidate.eval_script =
          jsonio::eval_script_from_json(j.at("eval_script"));
    } catch (const std::exception& e) {
      last = fmt::format("proposal parse failure: {}", e.what());
      continue;
    }
    if (candidate.issue_sql.empty()) {
      last = "proposal parse failure: issue_sql missing";
      continue;
    }
    std::vector<std::string> violations = validate_task(candidate);
    if (!violations.empty()) {
      last = fmt::format("proposal invalid: {}", violations.front());
      continue;
    }

    // Advisory opinion; a NO just burns the iteration.
    std::string coherence_reply = ask(
        backend,
        render_template(prompts.rewind_coherence,
                        {{"ISSUE_SQL", join_sql(candidate.issue_sql)},
                         {"REASON", reason},
                         {"SOLUTION_SQL", solution_text},
                         {"SCRIPT", script_text(candidate.eval_script)}}),
        config, tokens_in, tokens_out);
    if (!first_line_is_yes(coherence_reply)) {
      last = "coherence rejected";
      continue;
    }

    // Gate of record: the script must reject the issue SQL and accept the
    // solution, measured by execution.
    EvalOptions opts;
    opts.limits = config.limits;
    RedTeamResult rt = red_team_check(sandbox, candidate, opts);
    if (!rt.valid) {
      last = rt.reason;
      continue;
    }

    IssueTriple triple;
    triple.issue_sql = candidate.issue_sql;
    triple.issue_reason = reason;
    triple.category = candidate.category;
    triple.eval_script = candidate.eval_script;
    triple.iterations = iteration;
    out.triple = std::move(triple);
    return out;
  }
  out.reject_reason = last;
  return out;
}

QueryOutcome generate_user_query(const TaskInstance& draft_task,
                                 const std::string& schema_text,
                                 Backend& backend, const PromptSet& prompts,
                                 const RewindConfig& config,
                                 std::int64_t* tokens_in,
                                 std::int64_t* tokens_out) {
  QueryOutcome out;
  std::string last = "no drafts";
  std::string issue_text = join_sql(draft_task.issue_sql);
  std::string solution_text = join_sql(draft_task.solution_sql);
  std::string reason = draft_task.issue_reason.value_or("");
  std::string script = script_text(draft_task.eval_script);

  for (int round = 1; round <= config.max_query_rounds; ++round) {
    std::string draft = sqltext::trim(
        ask(backend,
            render_template(prompts.rewind_user_query,
                            {{"SCHEMA", schema_text},
                             {"ISSUE_SQL", issue_text},
                             {"REASON", reason}}),
            config, tokens_in, tokens_out));
    if (draft.empty()) {
      last = "empty draft";
      continue;
    }
    std::string verdict =
        ask(backend,
            render_template(prompts.rewind_consistency,
                            {{"USER_ISSUE", draft},
                             {"SCHEMA", schema_text},
                             {"ISSUE_SQL", issue_text},
                             {"SOLUTION_SQL", solution_text},
                             {"SCRIPT", script}}),
            config, tokens_in, tokens_out);
    if (first_line_is_yes(verdict)) {
      out.user_query = draft;
      out.rounds = round;
      return out;
    }
    last = "consistency rejected";
  }
  out.reject_reason = last;
  return out;
}

BuildReport build_instances(const std::vector<CorpusPost>& corpus,
                            const std::vector<GymDatabase>& dbs,
                            const ExclusionList& exclusion, Sandbox& sandbox,
                            Backend& backend, const PromptSet& prompts,
                            const RewindConfig& config) {
  if (config.target_size < 1) {
    throw std::invalid_argument("target_size must be at least 1");
  }
  BuildReport report;
  std::map<std::string, std::string> schema_cache;
  auto schema_for = [&](const GymDatabase& db) -> const std::string& {
    auto it = schema_cache.find(db.db_ref);
    if (it == schema_cache.end()) {
      it = schema_cache.emplace(db.db_ref, fetch_schema(sandbox, db)).first;
    }
    return it->second;
  };

  bool done = false;
  for (const auto& post : corpus) {
    if (done) break;
    report.posts_seen += 1;
    if (exclusion.count(post.source_id) > 0) {
      report.posts_excluded += 1;
      report.rejects.push_back(
          {post.source_id, "", "excluded", "source on the exclusion list"});
      continue;
    }
    std::vector<std::string> spans = extract_sql_spans(post.body);
    if (spans.empty()) {
      report.rejects.push_back(
          {post.source_id, "", "extract", "no SQL spans"});
      continue;
    }
    report.candidates_extracted += static_cast<int>(spans.size());

    for (const auto& span : spans) {
      if (done) break;
      for (const auto& db : dbs) {
        if (exclusion.count(db.db_ref) > 0) {
          report.rejects.push_back({post.source_id, db.db_ref, "excluded",
                                    "database on the exclusion list"});
          continue;
        }

        auto adapted = adapt_sql(span, schema_for(db), backend, prompts,
                                 config, &report.tokens_in,
                                 &report.tokens_out);
        if (!adapted.ok()) {
          report.rejects.push_back({post.source_id, db.db_ref, "adapt",
                                    adapted.error->message});
          continue;
        }
        std::vector<std::string> stmts =
            sqltext::split_statements(*adapted.value);
        if (stmts.empty()) {
          report.rejects.push_back(
              {post.source_id, db.db_ref, "adapt", "empty SQL"});
          continue;
        }

        GateResult gate;
        try {
          auto session = sandbox.open_session(probe_task(db));
          gate = solution_gate(sandbox, *session, stmts, config.limits);
          sandbox.close_session(*session);
        } catch (const SandboxError& e) {
          gate.ok = false;
          gate.reason = e.what();
        }
        if (!gate.ok) {
          report.rejects.push_back(
              {post.source_id, db.db_ref, "gate", gate.reason});
          continue;
        }

        IssueOutcome issue =
            synthesize_issue(stmts, db, sandbox, backend, prompts, config,
                             &report.tokens_in, &report.tokens_out);
        if (!issue.triple.has_value()) {
          report.rejects.push_back(
              {post.source_id, db.db_ref, "issue", issue.reject_reason});
          continue;
        }

        TaskInstance task = probe_task(db);
        task.task_id = fmt::format("gym-{:04d}", report.instances.size() + 1);
        task.category = issue.triple->category;
        task.solution_sql = stmts;
        task.issue_sql = issue.triple->issue_sql;
        task.issue_reason = issue.triple->issue_reason;
        task.eval_script = issue.triple->eval_script;

        QueryOutcome query =
            generate_user_query(task, schema_for(db), backend, prompts,
                                config, &report.tokens_in,
                                &report.tokens_out);
        if (!query.user_query.has_value()) {
          report.rejects.push_back(
              {post.source_id, db.db_ref, "user_query", query.reject_reason});
          continue;
        }
        task.user_query = *query.user_query;

        // Belt and braces: anything that ships re-passes the mechanical
        // check as a finished task.
        EvalOptions opts;
        opts.limits = config.limits;
        RedTeamResult rt = red_team_check(sandbox, task, opts);
        if (!rt.valid) {
          report.rejects.push_back({post.source_id, db.db_ref, "issue",
                                    fmt::format("final check failed: {}",
                                                rt.reason)});
          continue;
        }

        GymInstance instance;
        instance.task = std::move(task);
        instance.provenance = {post.source_id, db.db_ref,
                               issue.triple->iterations, query.rounds};
        report.instances.push_back(std::move(instance));

        if (report.instances.size() >= config.target_size) done = true;
        break;  // at most one acceptance per (post, span) pair
      }
      if (done) break;
    }
  }
  return report;
}

}  // namespace sqlfix
