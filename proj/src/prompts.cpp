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

#include "sqlfix/prompts.hpp"

#include "sqlfix/jsonio.hpp"

namespace sqlfix {

PromptSet default_prompts() {
  PromptSet p;

  p.sqlact_turn = R"(You are fixing a SQL issue on database {db_id}.

Schema:
{SCHEMA}

User issue:
{USER_ISSUE}

SQL with the issue:
{ISSUE_SQL}

{knowledge}{plan}Previous turns:
{history}

You still have {turn} turns left. Decide the next diagnostic or corrective SQL to run against the database.
Reply with exactly one thought and one action:
<thought>[Your Thought]</thought>
<action>[Executable SQL]</action>
When you are confident the issue is resolved, just output <action>[DONE]</action>.
)";

  p.action_only = R"(You are producing the SQL action for one round of a debugging session on database {db_id}.

Schema:
{SCHEMA}

User issue:
{USER_ISSUE}

Previous turns:
{history}

Current round thought:
{thought}

Generate the action for the current round thought. Reply with:
<action>[Executable SQL]</action>
or <action>[DONE]</action> when the issue is resolved.
)";

  p.final_answer = R"(You debugged a SQL issue on database {db_id}.

User issue:
{USER_ISSUE}

SQL with the issue:
{ISSUE_SQL}

Debugging session:
{history}

Generate the final SQL that solves the user issue. Wrap your answer in a ```sql fence.
)";

  p.toolact_turn = R"(You are investigating a SQL issue on database {db_id} using a fixed set of tools.

User issue:
{USER_ISSUE}

SQL with the issue:
{ISSUE_SQL}

Previous turns:
{history}

You still have {turn} turns left. Available actions:
- Schema Inspection(<table>): show the DDL of a table
- Sample Data(<table>): preview rows from a table
- Solution Query: <SQL>: submit the final fix and stop

Reply with exactly one thought and one action:
<thought>[Your Thought]</thought>
<action>[One tool invocation]</action>
)";

  p.plan_infer = R"(A user hit a SQL issue that was later fixed. Derive the abstract repair plan that leads from the broken SQL to the fix.

Schema:
{SCHEMA}

User issue:
{USER_ISSUE}

Broken SQL:
{ISSUE_SQL}

Corrected SQL:
{SOLUTION_SQL}

Write the plan as a numbered list, one operation per line, each at most {budget} tokens. Describe operations abstractly; do not restate the corrected SQL.
)";

  p.rewind_adapt = R"(Rewrite the SQL below so every table and column reference matches the given schema. Preserve the query's intent.

Schema:
{SCHEMA}

SQL:
{SQL}

Wrap the rewritten SQL in a ```sql fence.
)";

  p.rewind_issue = R"(Modify the working SQL below to introduce one realistic issue a user could plausibly hit, and design test cases that catch it.
Reply with a single JSON object shaped like:
{"issue_sql": ["<broken SQL>"], "issue_reason": "<why it is wrong>", "category": "QueryLike", "eval_script": {"requires_order": false, "test_cases": [{"kind": "ResultMatch", "reference_sql": "<query>"}]}}
Allowed test case kinds: ResultMatch (reference_sql), StateProbe (probe_sql plus expected rows or expected_scalar), MustContain (patterns), MustNotContain (patterns), ExecOk.
The test cases must pass for the working SQL and fail for the broken SQL.

Schema:
{SCHEMA}

Working SQL:
{SOLUTION_SQL}
)";

  p.rewind_coherence = R"(Check whether this bug report material is coherent: the broken SQL should exhibit the stated reason, and the test cases should separate it from the working SQL.

Broken SQL:
{ISSUE_SQL}

Reason:
{REASON}

Working SQL:
{SOLUTION_SQL}

Test cases:
{SCRIPT}

Answer YES or NO on the first line, then a short justification.
)";

  p.rewind_user_query = R"(Write the message a database user would post about this issue. Include what they are trying to do, what goes wrong, and what they need. Do not mention the corrected SQL.

Schema:
{SCHEMA}

Broken SQL:
{ISSUE_SQL}

Reason:
{REASON}

Reply with the message text only.
)";

  p.rewind_consistency = R"(Check whether this user message is consistent with the artifacts below: same intent, same symptom, no invented tables or columns.

User message:
{USER_ISSUE}

Schema:
{SCHEMA}

Broken SQL:
{ISSUE_SQL}

Working SQL:
{SOLUTION_SQL}

Test cases:
{SCRIPT}

Answer YES or NO on the first line, then a short justification.
)";

  return p;
}

namespace {

void overlay(std::string* slot, const std::filesystem::path& dir,
             const char* name) {
  std::filesystem::path file = dir / (std::string(name) + ".txt");
  if (std::filesystem::exists(file)) *slot = jsonio::read_text_file(file);
}

}  // namespace

PromptSet load_prompts(const std::filesystem::path& dir) {
  PromptSet p = default_prompts();
  overlay(&p.sqlact_turn, dir, "sqlact_turn");
  overlay(&p.action_only, dir, "action_only");
  overlay(&p.final_answer, dir, "final_answer");
  overlay(&p.toolact_turn, dir, "toolact_turn");
  overlay(&p.plan_infer, dir, "plan_infer");
  overlay(&p.rewind_adapt, dir, "rewind_adapt");
  overlay(&p.rewind_issue, dir, "rewind_issue");
  overlay(&p.rewind_coherence, dir, "rewind_coherence");
  overlay(&p.rewind_user_query, dir, "rewind_user_query");
  overlay(&p.rewind_consistency, dir, "rewind_consistency");
  return p;
}

PromptSet prompts_for_bundle(const std::string& bundle_id) {
  if (bundle_id.empty() || bundle_id == "default") return default_prompts();
  return load_prompts(bundle_id);
}

std::string render_template(const std::string& tpl,
                            const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '{') {
      std::size_t close = tpl.find('}', i + 1);
      if (close != std::string::npos) {
        std::string key = tpl.substr(i + 1, close - i - 1);
        auto it = vars.find(key);
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tpl[i]);
    ++i;
  }
  return out;
}

}  // namespace sqlfix
