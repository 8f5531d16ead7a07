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

#include "sqlfix/domain.hpp"

#include <fmt/format.h>

#include <stdexcept>

#include "sqlfix/sqltext.hpp"

namespace sqlfix {

std::string to_string(Dialect d) {
  switch (d) {
    case Dialect::kEmbeddedRef: return "EmbeddedRef";
    case Dialect::kPostgresLike: return "PostgresLike";
    case Dialect::kMysqlLike: return "MySQLLike";
    case Dialect::kServerLike: return "ServerLike";
    case Dialect::kOracleLike: return "OracleLike";
  }
  return "EmbeddedRef";
}

std::string to_string(Category c) {
  switch (c) {
    case Category::kQueryLike: return "QueryLike";
    case Category::kManagement: return "Management";
    case Category::kPersonalization: return "Personalization";
  }
  return "QueryLike";
}

std::optional<Dialect> dialect_from_string(const std::string& s) {
  if (s == "EmbeddedRef") return Dialect::kEmbeddedRef;
  if (s == "PostgresLike") return Dialect::kPostgresLike;
  if (s == "MySQLLike") return Dialect::kMysqlLike;
  if (s == "ServerLike") return Dialect::kServerLike;
  if (s == "OracleLike") return Dialect::kOracleLike;
  return std::nullopt;
}

std::optional<Category> category_from_string(const std::string& s) {
  if (s == "QueryLike") return Category::kQueryLike;
  if (s == "Management") return Category::kManagement;
  if (s == "Personalization") return Category::kPersonalization;
  return std::nullopt;
}

std::string to_string(TestKind k) {
  switch (k) {
    case TestKind::kResultMatch: return "ResultMatch";
    case TestKind::kStateProbe: return "StateProbe";
    case TestKind::kMustContain: return "MustContain";
    case TestKind::kMustNotContain: return "MustNotContain";
    case TestKind::kExecOk: return "ExecOk";
  }
  return "ExecOk";
}

std::optional<TestKind> test_kind_from_string(const std::string& s) {
  if (s == "ResultMatch") return TestKind::kResultMatch;
  if (s == "StateProbe") return TestKind::kStateProbe;
  if (s == "MustContain") return TestKind::kMustContain;
  if (s == "MustNotContain") return TestKind::kMustNotContain;
  if (s == "ExecOk") return TestKind::kExecOk;
  return std::nullopt;
}

namespace {

bool all_statements_nonblank(const std::vector<std::string>& stmts) {
  for (const auto& s : stmts) {
    if (sqltext::trim(s).empty()) return false;
  }
  return true;
}

// A statement entry holding several top-level statements defeats
// per-statement execution, so it is flagged here rather than split.
bool any_multi_statement(const std::vector<std::string>& stmts) {
  for (const auto& s : stmts) {
    if (sqltext::count_statements(s) > 1) return true;
  }
  return false;
}

void check_case_payload(const TestCase& tc, std::size_t i,
                        std::vector<std::string>* problems) {
  auto field = [&](const char* name) {
    return fmt::format("eval_script.test_cases[{}].{}", i, name);
  };
  auto forbid = [&](bool populated, const char* name) {
    if (populated)
      problems->push_back(field(name) + ": not valid for kind " +
                          to_string(tc.kind));
  };
  switch (tc.kind) {
    case TestKind::kResultMatch:
      if (sqltext::trim(tc.reference_sql).empty())
        problems->push_back(field("reference_sql") + ": must be non-empty");
      forbid(!tc.probe_sql.empty(), "probe_sql");
      forbid(!tc.patterns.empty(), "patterns");
      break;
    case TestKind::kStateProbe:
      if (sqltext::trim(tc.probe_sql).empty())
        problems->push_back(field("probe_sql") + ": must be non-empty");
      if (tc.expected.has_value() == tc.expected_scalar.has_value())
        problems->push_back(field("expected") +
                            ": needs exactly one of expected rows or "
                            "expected_scalar");
      forbid(!tc.reference_sql.empty(), "reference_sql");
      forbid(!tc.patterns.empty(), "patterns");
      break;
    case TestKind::kMustContain:
    case TestKind::kMustNotContain:
      if (tc.patterns.empty())
        problems->push_back(field("patterns") + ": must be non-empty");
      for (const auto& p : tc.patterns) {
        if (p.empty()) {
          problems->push_back(field("patterns") + ": pattern must be non-empty");
          break;
        }
      }
      forbid(!tc.reference_sql.empty(), "reference_sql");
      forbid(!tc.probe_sql.empty(), "probe_sql");
      break;
    case TestKind::kExecOk:
      forbid(!tc.reference_sql.empty(), "reference_sql");
      forbid(!tc.probe_sql.empty(), "probe_sql");
      forbid(!tc.patterns.empty(), "patterns");
      break;
  }
}

}  // namespace

std::vector<std::string> validate_task(const TaskInstance& task) {
  std::vector<std::string> problems;
  if (task.task_id.empty()) problems.push_back("task_id: must be non-empty");
  if (task.db_ref.empty()) problems.push_back("db_ref: must be non-empty");
  if (sqltext::trim(task.user_query).empty())
    problems.push_back("user_query: must be non-empty");

  if (task.issue_sql.empty()) {
    problems.push_back("issue_sql: must be non-empty");
  } else if (!all_statements_nonblank(task.issue_sql)) {
    problems.push_back("issue_sql: every statement must be non-blank");
  } else if (any_multi_statement(task.issue_sql)) {
    problems.push_back("issue_sql: one statement per entry");
  }

  if (task.solution_sql.empty()) {
    problems.push_back("solution_sql: must be non-empty");
  } else if (!all_statements_nonblank(task.solution_sql)) {
    problems.push_back("solution_sql: every statement must be non-blank");
  } else if (any_multi_statement(task.solution_sql)) {
    problems.push_back("solution_sql: one statement per entry");
  }

  if (task.eval_script.test_cases.empty())
    problems.push_back("eval_script: needs >=1 test case");
  for (std::size_t i = 0; i < task.eval_script.test_cases.size(); ++i)
    check_case_payload(task.eval_script.test_cases[i], i, &problems);

  return problems;
}

double success_rate(const std::vector<bool>& outcomes) {
  if (outcomes.empty())
    throw std::invalid_argument("success_rate: empty input");
  int passed = 0;
  for (bool b : outcomes) passed += b ? 1 : 0;
  return static_cast<double>(passed) / static_cast<double>(outcomes.size());
}

std::string format_percent(int n_passed, int n_total) {
  if (n_total <= 0) return "0.00";
  // Basis points, rounded half up: adding n_total before dividing by
  // 2*n_total is exactly +0.5 bp in integer arithmetic.
  std::int64_t bp =
      (static_cast<std::int64_t>(n_passed) * 20000 + n_total) /
      (static_cast<std::int64_t>(n_total) * 2);
  return fmt::format("{}.{:02}", bp / 100, bp % 100);
}

}  // namespace sqlfix
