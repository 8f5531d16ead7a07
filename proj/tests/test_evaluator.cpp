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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "sqlfix/domain.hpp"
#include "sqlfix/evaluator.hpp"
#include "sqlfix/sandbox.hpp"
#include "support/fixtures.hpp"

using namespace sqlfix;
using testsupport::ShopEnv;
using testsupport::simple_task;

namespace {

Value I(std::int64_t v) { return Value{v}; }
Value D(double v) { return Value{v}; }
Value S(const char* v) { return Value{std::string{v}}; }

MatchOptions defaults() { return MatchOptions{}; }

}  // namespace

TEST_CASE("values_match handles nulls, ints, and strings") {
  MatchOptions opts = defaults();
  CHECK(values_match(Value{}, Value{}, opts));
  CHECK_FALSE(values_match(Value{}, I(0), opts));
  CHECK_FALSE(values_match(S("NULL"), Value{}, opts));

  CHECK(values_match(I(5), I(5), opts));
  CHECK_FALSE(values_match(I(5), I(6), opts));

  CHECK(values_match(S("abc"), S("abc"), opts));
  CHECK_FALSE(values_match(S("abc"), S("ABC"), opts));
}

TEST_CASE("values_match numeric tolerances") {
  MatchOptions opts = defaults();

  // Absolute tolerance near zero.
  CHECK(values_match(D(0.0), D(1e-6), opts));
  CHECK_FALSE(values_match(D(0.0), D(1.1e-6), opts));

  // Relative tolerance for large magnitudes.
  CHECK(values_match(D(1e12), D(1e12 * (1 + 5e-10)), opts));
  CHECK_FALSE(values_match(D(1e12), D(1e12 * (1 + 2e-9)), opts));

  // Integer and double compare as numbers.
  CHECK(values_match(I(1), D(1.0), opts));
  CHECK(values_match(D(3.0), I(3), opts));
  CHECK_FALSE(values_match(I(1), D(1.5), opts));
}

TEST_CASE("values_match parses fully numeric strings") {
  MatchOptions opts = defaults();
  CHECK(values_match(I(42), S("42"), opts));
  CHECK(values_match(S("2.5"), D(2.5), opts));
  CHECK(values_match(S("1e3"), I(1000), opts));
  CHECK_FALSE(values_match(I(42), S("42x"), opts));
  CHECK_FALSE(values_match(I(42), S(""), opts));
  // Two strings stay strings even when numeric.
  CHECK_FALSE(values_match(S("1.0"), S("1.00"), opts));
}

TEST_CASE("soft_result_match rejects ragged input") {
  MatchOptions opts = defaults();
  std::vector<Row> square = {{I(1), I(2)}, {I(3), I(4)}};
  std::vector<Row> ragged = {{I(1), I(2)}, {I(3)}};
  CHECK_THROWS_WITH_AS(soft_result_match(ragged, square, opts),
                       "soft_result_match: ragged predicted rows",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(soft_result_match(square, ragged, opts),
                       "soft_result_match: ragged reference rows",
                       std::invalid_argument);
}

TEST_CASE("soft_result_match shape checks") {
  MatchOptions opts = defaults();

  CHECK(soft_result_match({}, {}, opts).matched);

  MatchResult count = soft_result_match({}, {{I(1)}}, opts);
  CHECK_FALSE(count.matched);
  CHECK(count.detail == "row count 0 != 1");

  MatchResult width = soft_result_match({{I(1), I(2)}}, {{I(1)}}, opts);
  CHECK_FALSE(width.matched);
  CHECK(width.detail == "column count 2 != 1");
}

TEST_CASE("soft_result_match ordered compares positionally") {
  MatchOptions opts = defaults();
  opts.ordered = true;
  std::vector<Row> a = {{I(1)}, {I(2)}};
  std::vector<Row> b = {{I(2)}, {I(1)}};
  MatchResult r = soft_result_match(a, b, opts);
  CHECK_FALSE(r.matched);
  CHECK(r.detail == "row 1: [1] != [2]");
  CHECK(soft_result_match(a, a, opts).matched);

  MatchResult preview =
      soft_result_match({{I(1), Value{}}}, {{I(2), Value{}}}, opts);
  CHECK(preview.detail == "row 1: [1, NULL] != [2, NULL]");
}

TEST_CASE("soft_result_match unordered is a multiset comparison") {
  MatchOptions opts = defaults();
  std::vector<Row> a = {{I(1)}, {I(2)}};
  std::vector<Row> b = {{I(2)}, {I(1)}};
  CHECK(soft_result_match(a, b, opts).matched);

  // Duplicates must be covered one-for-one.
  CHECK(soft_result_match({{I(1)}, {I(1)}}, {{I(1)}, {I(1)}}, opts).matched);
  MatchResult dup =
      soft_result_match({{I(1)}, {I(1)}, {I(2)}}, {{I(1)}, {I(2)}, {I(2)}},
                        opts);
  CHECK_FALSE(dup.matched);
  CHECK(dup.detail == "unmatched row [1]");

  // Tolerances apply inside the matching.
  CHECK(soft_result_match({{D(0.0)}}, {{D(1e-6)}}, opts).matched);
}

TEST_CASE("evaluate_task accepts the solution and flags the issue") {
  ShopEnv env;
  TaskInstance task = simple_task(
      "t-basic", "SELECT name FROM products",
      "SELECT name FROM products WHERE category = 'tools' ORDER BY name");

  TaskOutcome good = evaluate_task(env.sandbox, task, task.solution_sql);
  CHECK(good.passed);
  CHECK(good.task_id == "t-basic");
  REQUIRE(good.per_case.size() == 1);
  CHECK(good.per_case[0].passed);
  CHECK(good.per_case[0].detail.empty());

  TaskOutcome bad = evaluate_task(env.sandbox, task, task.issue_sql);
  CHECK_FALSE(bad.passed);
  CHECK(bad.per_case[0].detail == "row count 5 != 2");
}

TEST_CASE("evaluate_task rejects an empty prediction") {
  ShopEnv env;
  TaskInstance task = simple_task("t-none", "SELECT 1", "SELECT 1");
  CHECK_THROWS_WITH_AS(evaluate_task(env.sandbox, task, {}),
                       "evaluate_task: empty prediction",
                       std::invalid_argument);
}

TEST_CASE("evaluate_task reports session setup failures per case") {
  Sandbox empty;
  TaskInstance task = simple_task("t-setup", "SELECT 1", "SELECT 1");
  TaskOutcome out = evaluate_task(empty, task, task.solution_sql);
  CHECK_FALSE(out.passed);
  REQUIRE(out.per_case.size() == 1);
  CHECK(out.per_case[0].detail ==
        "setup: no executor registered for dialect EmbeddedRef");
}

TEST_CASE("result match runs the reference on a reset database") {
  ShopEnv env;
  TaskInstance task = simple_task("t-reset", "SELECT 1",
                                  "SELECT price FROM products WHERE id = 1");
  std::vector<std::string> pred = {
      "UPDATE products SET price = 99 WHERE id = 1",
      "SELECT price FROM products WHERE id = 1"};
  TaskOutcome out = evaluate_task(env.sandbox, task, pred);
  CHECK_FALSE(out.passed);
  // The prediction saw its own update (99); the reference must see the
  // original 19.99 again.
  CHECK(out.per_case[0].detail == "row 1: [99] != [19.99]");
}

TEST_CASE("result match failure details") {
  ShopEnv env;
  TaskInstance task = simple_task("t-details", "SELECT 1", "SELECT 1");

  TaskOutcome broken = evaluate_task(env.sandbox, task,
                                     {"SELECT * FROM missing_table"});
  CHECK(broken.per_case[0].detail.find(
            "statement 1: no such table: missing_table") == 0);

  TaskOutcome no_rows = evaluate_task(env.sandbox, task,
                                      {"UPDATE products SET price = price"});
  CHECK(no_rows.per_case[0].detail == "prediction produced no result set");

  TaskInstance bad_ref = simple_task("t-badref", "SELECT 1", "SELECT 1");
  bad_ref.eval_script.test_cases[0].reference_sql = "SELECT * FROM nope";
  TaskOutcome ref_fail = evaluate_task(env.sandbox, bad_ref, {"SELECT 1"});
  CHECK(ref_fail.per_case[0].detail ==
        "reference failed: no such table: nope");
}

TEST_CASE("state probes compare scalars and row sets") {
  ShopEnv env;
  TaskInstance task = simple_task("t-probe", "SELECT 1", "SELECT 1");
  TestCase probe;
  probe.kind = TestKind::kStateProbe;
  probe.probe_sql = "SELECT COUNT(*) FROM orders";
  probe.expected_scalar = I(0);
  task.eval_script.test_cases = {probe};

  TaskOutcome pass = evaluate_task(env.sandbox, task, {"DELETE FROM orders"});
  CHECK(pass.passed);

  TaskOutcome fail = evaluate_task(env.sandbox, task, {"SELECT 1"});
  CHECK_FALSE(fail.passed);
  CHECK(fail.per_case[0].detail == "probe value 6 != expected 0");

  SUBCASE("probe expecting one scalar rejects multi-row results") {
    task.eval_script.test_cases[0].probe_sql =
        "SELECT id FROM products ORDER BY id";
    task.eval_script.test_cases[0].expected_scalar = I(1);
    TaskOutcome shape = evaluate_task(env.sandbox, task, {"SELECT 1"});
    CHECK(shape.per_case[0].detail == "probe returned 5 rows, expected 1 scalar");
  }

  SUBCASE("probe row set with empty expectation means no rows") {
    task.eval_script.test_cases[0].expected_scalar.reset();
    task.eval_script.test_cases[0].expected = std::vector<Row>{};
    task.eval_script.test_cases[0].probe_sql =
        "SELECT id FROM orders WHERE quantity > 100";
    TaskOutcome none = evaluate_task(env.sandbox, task, {"SELECT 1"});
    CHECK(none.passed);
  }

  SUBCASE("probe failure carries the engine message") {
    task.eval_script.test_cases[0].probe_sql = "SELECT * FROM gone";
    TaskOutcome err = evaluate_task(env.sandbox, task, {"SELECT 1"});
    CHECK(err.per_case[0].detail == "probe failed: no such table: gone");
  }
}

TEST_CASE("text constraints never execute the prediction") {
  ShopEnv env;
  TaskInstance task = simple_task("t-text", "SELECT 1", "SELECT 1");
  TestCase contains;
  contains.kind = TestKind::kMustContain;
  contains.patterns = {"over ("};
  task.eval_script.test_cases = {contains};

  // Would be a hard error if executed: the table does not exist.
  std::vector<std::string> pred = {
      "SELECT RANK() OVER (ORDER BY x) FROM phantom_table"};
  TaskOutcome pass = evaluate_task(env.sandbox, task, pred);
  CHECK(pass.passed);

  TaskOutcome miss = evaluate_task(env.sandbox, task, {"SELECT 1"});
  CHECK_FALSE(miss.passed);
  CHECK(miss.per_case[0].detail == "missing pattern: over (");

  task.eval_script.test_cases[0].kind = TestKind::kMustNotContain;
  task.eval_script.test_cases[0].patterns = {"(select"};
  TaskOutcome forbidden = evaluate_task(
      env.sandbox, task, {"SELECT 1 WHERE 1 IN (SELECT 1)"});
  CHECK_FALSE(forbidden.passed);
  CHECK(forbidden.per_case[0].detail == "forbidden pattern present: (select");
  CHECK(evaluate_task(env.sandbox, task, {"SELECT 2"}).passed);
}

TEST_CASE("exec ok requires every statement to succeed") {
  ShopEnv env;
  TaskInstance task = simple_task("t-execok", "SELECT 1", "SELECT 1");
  task.eval_script.test_cases[0] = TestCase{};
  task.eval_script.test_cases[0].kind = TestKind::kExecOk;

  CHECK(evaluate_task(env.sandbox, task, {"SELECT 1", "SELECT 2"}).passed);
  TaskOutcome fail = evaluate_task(env.sandbox, task,
                                   {"SELECT 1", "DELETE FROM nothing_here"});
  CHECK_FALSE(fail.passed);
  CHECK(fail.per_case[0].detail.find("statement 2:") == 0);
}

TEST_CASE("ordered scripts detect sort direction") {
  ShopEnv env;
  auto tasks = testsupport::load_fixture_tasks();
  const TaskInstance& task =
      testsupport::task_by_id(tasks, "qlike_sort_direction");
  CHECK(task.eval_script.requires_order);
  CHECK(evaluate_task(env.sandbox, task, task.solution_sql).passed);
  CHECK_FALSE(evaluate_task(env.sandbox, task, task.issue_sql).passed);
}

TEST_CASE("red team accepts every fixture task in both isolation modes") {
  ShopEnv env;
  auto tasks = testsupport::load_fixture_tasks();
  REQUIRE(tasks.size() == 15);
  for (IsolationMode mode :
       {IsolationMode::kTransactionRollback, IsolationMode::kTemplateCopy}) {
    for (const auto& task : tasks) {
      CAPTURE(task.task_id);
      CAPTURE(to_string(mode));
      EvalOptions opts;
      opts.isolation = mode;
      RedTeamResult rt = red_team_check(env.sandbox, task, opts);
      INFO(rt.reason);
      CHECK(rt.valid);
      CHECK(rt.solution_passes);
      CHECK(rt.issue_fails);
      CHECK(rt.reason.empty());
    }
  }
}

TEST_CASE("red team rejects tasks whose issue already passes") {
  ShopEnv env;
  TaskInstance task = simple_task("t-nocatch", "SELECT name FROM products",
                                  "SELECT name FROM products");
  RedTeamResult rt = red_team_check(env.sandbox, task);
  CHECK_FALSE(rt.valid);
  CHECK(rt.solution_passes);
  CHECK_FALSE(rt.issue_fails);
  CHECK(rt.reason == "issue not caught");
}

TEST_CASE("red team names the failing case when the solution breaks") {
  ShopEnv env;
  TaskInstance task =
      simple_task("t-badsol", "SELECT 1", "SELECT * FROM nope");
  RedTeamResult rt = red_team_check(env.sandbox, task);
  CHECK_FALSE(rt.valid);
  CHECK(rt.reason ==
        "solution rejected (ResultMatch: statement 1: no such table: nope)");
}

TEST_CASE("red team reports validation violations first") {
  ShopEnv env;
  TaskInstance task = simple_task("t-invalid", "SELECT 1", "SELECT 1");
  task.user_query.clear();
  RedTeamResult rt = red_team_check(env.sandbox, task);
  CHECK_FALSE(rt.valid);
  CHECK(rt.reason == "invalid task: user_query: must be non-empty");
}

TEST_CASE("evaluate_dataset aggregates by category and flags gaps") {
  ShopEnv env;
  std::vector<TaskInstance> tasks;
  tasks.push_back(simple_task(
      "d-1", "SELECT name FROM products",
      "SELECT name FROM products WHERE category = 'tools' ORDER BY name"));
  tasks.push_back(simple_task(
      "d-2", "SELECT name FROM products",
      "SELECT name FROM products WHERE category = 'home' ORDER BY name"));
  tasks.push_back(simple_task("d-3", "SELECT 2", "SELECT 1"));
  tasks[2].category = Category::kManagement;

  std::map<std::string, std::vector<std::string>> preds;
  preds["d-1"] = tasks[0].solution_sql;  // passes
  preds["d-2"] = tasks[1].issue_sql;     // wrong rows
  // d-3 has no prediction at all.

  DatasetResult result = evaluate_dataset(env.sandbox, tasks, preds);
  CHECK(result.report.n_total == 3);
  CHECK(result.report.n_passed == 1);
  CHECK(result.report.sr == doctest::Approx(1.0 / 3.0));

  REQUIRE(result.outcomes.size() == 3);
  CHECK(result.outcomes[0].task_id == "d-1");
  CHECK(result.outcomes[0].passed);
  CHECK_FALSE(result.outcomes[1].passed);
  CHECK_FALSE(result.outcomes[2].passed);
  REQUIRE(result.outcomes[2].per_case.size() == 1);
  CHECK(result.outcomes[2].per_case[0].detail == "missing prediction");

  const CategoryCount& qlike =
      result.report.per_category.at(Category::kQueryLike);
  CHECK(qlike.n_total == 2);
  CHECK(qlike.n_passed == 1);
  const CategoryCount& mgmt =
      result.report.per_category.at(Category::kManagement);
  CHECK(mgmt.n_total == 1);
  CHECK(mgmt.n_passed == 0);
}

TEST_CASE("evaluate_dataset rejects duplicate task ids") {
  ShopEnv env;
  TaskInstance t = simple_task("dup", "SELECT 1", "SELECT 1");
  CHECK_THROWS_WITH_AS(
      evaluate_dataset(env.sandbox, {t, t}, {}),
      "evaluate_dataset: duplicate task_id 'dup'", std::invalid_argument);
}

TEST_CASE("evaluate_dataset runs with a worker pool") {
  ShopEnv env;
  auto tasks = testsupport::load_fixture_tasks();
  std::map<std::string, std::vector<std::string>> preds;
  for (const auto& t : tasks) preds[t.task_id] = t.solution_sql;
  EvalOptions opts;
  opts.workers = 4;
  DatasetResult result = evaluate_dataset(env.sandbox, tasks, preds, opts);
  CHECK(result.report.n_total == 15);
  CHECK(result.report.n_passed == 15);
  // Outcomes stay in task order regardless of completion order.
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    CHECK(result.outcomes[i].task_id == tasks[i].task_id);
  }
}
