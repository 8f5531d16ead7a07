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
// Scores predicted SQL fixes against a task's eval script inside a
// sandbox session, and validates tasks by red-teaming: the reference
// solution must pass, the issue SQL must fail.

#ifndef SQLFIX_EVALUATOR_HPP_
#define SQLFIX_EVALUATOR_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sqlfix/domain.hpp"
#include "sqlfix/sandbox.hpp"

namespace sqlfix {

// Numeric cells match within either tolerance; both defaults are pinned
// here and used everywhere.
inline constexpr double kFloatTolAbs = 1e-6;
inline constexpr double kFloatTolRel = 1e-9;

struct MatchOptions {
  bool ordered = false;
  double float_tol_abs = kFloatTolAbs;
  double float_tol_rel = kFloatTolRel;
};

struct MatchResult {
  bool matched = false;
  std::string detail;  // empty on match, else the first mismatch found
};

bool values_match(const Value& a, const Value& b, const MatchOptions& opts);

// Multiset comparison when unordered, positional when ordered. Throws
// std::invalid_argument on ragged input.
MatchResult soft_result_match(const std::vector<Row>& pred_rows,
                              const std::vector<Row>& ref_rows,
                              const MatchOptions& opts);

struct CaseOutcome {
  TestKind kind = TestKind::kExecOk;
  bool passed = false;
  std::string detail;
};

struct TaskOutcome {
  std::string task_id;
  std::vector<CaseOutcome> per_case;
  bool passed = false;  // conjunction of per_case
};

struct EvalOptions {
  ExecLimits limits;
  std::optional<IsolationMode> isolation;
  int workers = 1;
};

// Runs one test case on a freshly reset session. Text-only kinds
// (MustContain/MustNotContain) never execute the prediction.
CaseOutcome run_test_case(Sandbox& sandbox, Session& session,
                          const TestCase& test_case, bool requires_order,
                          const std::vector<std::string>& predicted_sql,
                          const ExecLimits& limits);

// Opens its own session, runs every case in order with resets between
// executing cases, closes the session. Throws std::invalid_argument when
// predicted_sql is empty.
TaskOutcome evaluate_task(Sandbox& sandbox, const TaskInstance& task,
                          const std::vector<std::string>& predicted_sql,
                          const EvalOptions& opts = EvalOptions{});

struct RedTeamResult {
  bool solution_passes = false;
  bool issue_fails = false;
  bool valid = false;
  std::string reason;  // empty when valid
};

// valid = the eval script accepts the solution and rejects the issue SQL,
// each measured on a fresh session.
RedTeamResult red_team_check(Sandbox& sandbox, const TaskInstance& task,
                             const EvalOptions& opts = EvalOptions{});

struct DatasetResult {
  SRReport report;
  std::vector<TaskOutcome> outcomes;  // in task order
};

// Tasks without a prediction entry count as failed. Duplicate task_id in
// the dataset is rejected with std::invalid_argument.
DatasetResult evaluate_dataset(
    Sandbox& sandbox, const std::vector<TaskInstance>& tasks,
    const std::map<std::string, std::vector<std::string>>& predictions,
    const EvalOptions& opts = EvalOptions{});

}  // namespace sqlfix

#endif  // SQLFIX_EVALUATOR_HPP_
