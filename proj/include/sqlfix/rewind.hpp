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
// Debugging tasks built in reverse: mine working SQL from forum-style
// posts, break it on purpose, attach test cases that catch the break, and
// write the user message. Model judgments along the way are advisory; the
// mechanical solution-passes/issue-fails check decides what ships.

#ifndef SQLFIX_REWIND_HPP_
#define SQLFIX_REWIND_HPP_

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sqlfix/domain.hpp"
#include "sqlfix/jsonio.hpp"
#include "sqlfix/llm.hpp"
#include "sqlfix/prompts.hpp"
#include "sqlfix/sandbox.hpp"

namespace sqlfix {

using jsonio::CorpusPost;

// A database candidates are tried against.
struct GymDatabase {
  std::string db_ref;
  Dialect dialect = Dialect::kEmbeddedRef;
};

// Source ids and database ids barred from generation; exact match.
using ExclusionList = std::set<std::string>;

struct RewindConfig {
  int max_iter = 3;         // issue-synthesis refinements
  int max_query_rounds = 3; // user-message drafts
  std::size_t target_size = 1;
  ExecLimits limits;
  double temperature = 0.0;
  int max_tokens = 2048;
};

struct RejectRecord {
  std::string source_id;
  std::string db_ref;
  std::string stage;  // extract | adapt | gate | issue | user_query
  std::string reason;
};

struct GymProvenance {
  std::string source_id;
  std::string db_ref;
  int issue_iterations = 0;
  int query_rounds = 0;
};

struct GymInstance {
  TaskInstance task;
  GymProvenance provenance;
};

struct MinedSolution {
  std::string source_id;
  std::vector<std::string> solution_sql;
};

struct MineReport {
  std::vector<MinedSolution> accepted;
  std::vector<RejectRecord> rejects;
};

struct IssueTriple {
  std::vector<std::string> issue_sql;
  std::string issue_reason;
  Category category = Category::kQueryLike;
  EvalScript eval_script;
  int iterations = 0;  // 1-based count of proposals consumed
};

struct IssueOutcome {
  std::optional<IssueTriple> triple;
  std::string reject_reason;  // set when triple is empty
};

struct QueryOutcome {
  std::optional<std::string> user_query;
  int rounds = 0;
  std::string reject_reason;
};

struct BuildReport {
  std::vector<GymInstance> instances;
  std::vector<RejectRecord> rejects;
  int posts_seen = 0;
  int posts_excluded = 0;
  int candidates_extracted = 0;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
};

// SQL spans in a post body: fenced code blocks and 4-space indented runs
// that open with a SQL keyword. Exact duplicates within one body are
// dropped. Rule-based; no model involved.
std::vector<std::string> extract_sql_spans(const std::string& body);

// Candidate SQL rewritten against the target schema by the backend; one
// attempt, fence required.
ParseOutcome<std::string> adapt_sql(const std::string& sql,
                                    const std::string& schema_text,
                                    Backend& backend, const PromptSet& prompts,
                                    const RewindConfig& config,
                                    std::int64_t* tokens_in,
                                    std::int64_t* tokens_out);

// Acceptance gate for a mined solution: executes without error and yields
// at least one row whose first row has at least one non-null cell.
// Resets the session afterwards so gate runs cannot leak state.
struct GateResult {
  bool ok = false;
  std::string reason;  // "exec error: ..." or "null result"
};
GateResult solution_gate(Sandbox& sandbox, Session& session,
                         const std::vector<std::string>& sql,
                         const ExecLimits& limits);

// Extraction + adaptation + gate over a whole corpus against one database.
MineReport mine_solution_sql(const std::vector<CorpusPost>& corpus,
                             const GymDatabase& db, Sandbox& sandbox,
                             Backend& backend, const PromptSet& prompts,
                             const RewindConfig& config);

// Bounded proposal loop: the backend suggests (issue_sql, reason, eval
// script); a coherence opinion is taken, then the mechanical check must
// hold (script rejects the issue SQL, accepts the solution). Returns the
// first surviving triple with its iteration count.
IssueOutcome synthesize_issue(const std::vector<std::string>& solution_sql,
                              const GymDatabase& db, Sandbox& sandbox,
                              Backend& backend, const PromptSet& prompts,
                              const RewindConfig& config,
                              std::int64_t* tokens_in,
                              std::int64_t* tokens_out);

// Bounded drafting loop for the user message; each draft must be affirmed
// by a consistency check against the task artifacts.
QueryOutcome generate_user_query(const TaskInstance& draft_task,
                                 const std::string& schema_text,
                                 Backend& backend, const PromptSet& prompts,
                                 const RewindConfig& config,
                                 std::int64_t* tokens_in,
                                 std::int64_t* tokens_out);

// Full pipeline: posts × extracted spans × databases, skipping exclusions,
// stopping at target_size. At most one acceptance per (post, span) pair.
// Every emitted instance re-passed the mechanical check independently.
BuildReport build_instances(const std::vector<CorpusPost>& corpus,
                            const std::vector<GymDatabase>& dbs,
                            const ExclusionList& exclusion, Sandbox& sandbox,
                            Backend& backend, const PromptSet& prompts,
                            const RewindConfig& config);

}  // namespace sqlfix

#endif  // SQLFIX_REWIND_HPP_
