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

#ifndef SQLFIX_DOMAIN_HPP_
#define SQLFIX_DOMAIN_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sqlfix {

// A single cell. Monostate is SQL NULL.
using Value = std::variant<std::monostate, std::int64_t, double, std::string>;
using Row = std::vector<Value>;

enum class Dialect {
  kEmbeddedRef,
  kPostgresLike,
  kMysqlLike,
  kServerLike,
  kOracleLike,
};

enum class Category {
  kQueryLike,
  kManagement,
  kPersonalization,
};

std::string to_string(Dialect d);
std::string to_string(Category c);
std::optional<Dialect> dialect_from_string(const std::string& s);
std::optional<Category> category_from_string(const std::string& s);

enum class TestKind {
  kResultMatch,
  kStateProbe,
  kMustContain,
  kMustNotContain,
  kExecOk,
};

std::string to_string(TestKind k);
std::optional<TestKind> test_kind_from_string(const std::string& s);

// One check inside an eval script. Exactly one kind's payload may be
// populated:
//   ResultMatch:    reference_sql
//   StateProbe:     probe_sql plus expected rows or an expected scalar
//   MustContain:    patterns (compared against the normalized fix text)
//   MustNotContain: patterns
//   ExecOk:         no payload; passes when every fix statement ran clean
struct TestCase {
  TestKind kind = TestKind::kExecOk;
  std::string reference_sql;
  std::string probe_sql;
  std::optional<std::vector<Row>> expected;  // an empty list means "no rows"
  std::optional<Value> expected_scalar;
  std::vector<std::string> patterns;
};

struct EvalScript {
  std::vector<TestCase> test_cases;
  bool requires_order = false;
};

struct TaskInstance {
  std::string task_id;
  Dialect dialect = Dialect::kEmbeddedRef;
  std::string db_ref;
  Category category = Category::kQueryLike;
  std::string user_query;                   // natural-language issue report
  std::vector<std::string> issue_sql;       // the broken SQL, statement per entry
  std::vector<std::string> solution_sql;    // gold fix, statement per entry
  std::vector<std::string> preprocess_sql;  // run on a fresh session before anything else
  std::vector<std::string> cleanup_sql;     // best-effort teardown at session close
  EvalScript eval_script;
  std::optional<std::string> issue_reason;
  std::vector<std::string> knowledge_tags;
};

// Empty list means the instance is well formed. Each entry is one
// human-readable violation, "<field>: <problem>".
std::vector<std::string> validate_task(const TaskInstance& task);

// Sentinel the model emits in its action slot to end an episode.
inline constexpr const char* kDoneSentinel = "[DONE]";

struct Step {
  std::string thought;
  std::string action;       // SQL to run, or kDoneSentinel
  std::string observation;  // empty only when the action is the sentinel

  bool is_done() const { return action == kDoneSentinel; }
};

struct Trajectory {
  std::string task_id;
  std::string strategy;
  int tries_used = 1;
  std::vector<Step> steps;
  std::optional<std::string> final_sql;
  std::optional<bool> passed;  // set only once final_sql is set
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  std::int64_t wall_ms = 0;
};

// Ordered list of short abstract repair operations. Guides a rollout;
// never stored inside the resulting trajectory.
struct FunctionalPlan {
  std::vector<std::string> steps;
};

struct CategoryCount {
  int n_total = 0;
  int n_passed = 0;
};

struct SRReport {
  int n_total = 0;
  int n_passed = 0;
  double sr = 0.0;  // exact fraction; display rounding happens separately
  std::map<Category, CategoryCount> per_category;
};

// Fraction of true entries. Throws std::invalid_argument on empty input.
double success_rate(const std::vector<bool>& outcomes);

// Two-decimal percent with half-up rounding, e.g. (206, 530) -> "38.87".
std::string format_percent(int n_passed, int n_total);

}  // namespace sqlfix

#endif  // SQLFIX_DOMAIN_HPP_
