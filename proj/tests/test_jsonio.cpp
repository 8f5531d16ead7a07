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
#include "doctest.h"

#include <fstream>

#include "json.hpp"
#include "sqlfix/jsonio.hpp"
#include "support/fixtures.hpp"

using namespace sqlfix;
using namespace sqlfix::jsonio;
using sqlfix::testsupport::TempDir;
using nlohmann::json;

TEST_CASE("value codec") {
  CHECK(value_from_json(json(nullptr)) == Value{});
  CHECK(value_from_json(json(42)) == Value{std::int64_t{42}});
  CHECK(value_from_json(json(2.5)) == Value{2.5});
  CHECK(value_from_json(json("x")) == Value{std::string("x")});
  // Booleans land as integers; the engines have no native bool surface.
  CHECK(value_from_json(json(true)) == Value{std::int64_t{1}});
  CHECK(value_from_json(json(false)) == Value{std::int64_t{0}});
  CHECK_THROWS_AS(value_from_json(json::array()), JsonError);

  CHECK(value_to_json(Value{}).is_null());
  CHECK(value_to_json(Value{std::int64_t{7}}) == json(7));
  CHECK(value_to_json(Value{1.5}) == json(1.5));
  CHECK(value_to_json(Value{std::string("s")}) == json("s"));
}

TEST_CASE("row codec round-trips") {
  Row r = {Value{}, Value{std::int64_t{1}}, Value{2.5}, Value{std::string("x")}};
  CHECK(row_from_json(row_to_json(r)) == r);
  CHECK_THROWS_AS(row_from_json(json("not a list")), JsonError);
}

TEST_CASE("test case codec enforces per-kind payloads") {
  json j = {{"kind", "ResultMatch"}, {"reference_sql", "SELECT 1"}};
  TestCase tc = test_case_from_json(j);
  CHECK(tc.kind == TestKind::kResultMatch);
  CHECK(tc.reference_sql == "SELECT 1");

  j = {{"kind", "StateProbe"}, {"probe_sql", "SELECT 1"},
       {"expected_scalar", 3}};
  tc = test_case_from_json(j);
  REQUIRE(tc.expected_scalar.has_value());
  CHECK(*tc.expected_scalar == Value{std::int64_t{3}});

  j = {{"kind", "StateProbe"}, {"probe_sql", "SELECT 1"},
       {"expected", json::array({json::array({1, "a"})})}};
  tc = test_case_from_json(j);
  REQUIRE(tc.expected.has_value());
  REQUIRE(tc.expected->size() == 1);

  // Exactly one of the two expectation forms.
  j = {{"kind", "StateProbe"}, {"probe_sql", "SELECT 1"}};
  CHECK_THROWS_AS(test_case_from_json(j), JsonError);
  j["expected"] = json::array();
  j["expected_scalar"] = 1;
  CHECK_THROWS_AS(test_case_from_json(j), JsonError);

  j = {{"kind", "MustContain"}, {"patterns", json::array({"join"})}};
  tc = test_case_from_json(j);
  CHECK(tc.patterns == std::vector<std::string>{"join"});

  j = {{"kind", "ExecOk"}};
  tc = test_case_from_json(j);
  CHECK(tc.kind == TestKind::kExecOk);

  j = {{"kind", "NoSuchKind"}};
  CHECK_THROWS_AS(test_case_from_json(j), JsonError);
}

TEST_CASE("task codec round-trips and validates fields") {
  TaskInstance t = testsupport::simple_task("rt-1", "SELECT 1", "SELECT 2");
  t.preprocess_sql = {"CREATE TABLE x (a)"};
  t.cleanup_sql = {"DROP TABLE x"};
  t.issue_reason = "off by one";
  t.knowledge_tags = {"joins"};
  t.eval_script.requires_order = true;

  json j = task_to_json(t);
  TaskInstance back = task_from_json(j);
  CHECK(back.task_id == t.task_id);
  CHECK(back.dialect == t.dialect);
  CHECK(back.db_ref == t.db_ref);
  CHECK(back.category == t.category);
  CHECK(back.issue_sql == t.issue_sql);
  CHECK(back.solution_sql == t.solution_sql);
  CHECK(back.preprocess_sql == t.preprocess_sql);
  CHECK(back.cleanup_sql == t.cleanup_sql);
  CHECK(back.issue_reason == t.issue_reason);
  CHECK(back.knowledge_tags == t.knowledge_tags);
  CHECK(back.eval_script.requires_order);
  REQUIRE(back.eval_script.test_cases.size() == 1);
  CHECK(back.eval_script.test_cases[0].reference_sql == "SELECT 2");

  j.erase("eval_script");
  CHECK_THROWS_AS(task_from_json(j), JsonError);

  j = task_to_json(t);
  j["dialect"] = "NoSuchDialect";
  CHECK_THROWS_AS(task_from_json(j), JsonError);

  // preprocess/cleanup/tags are optional; issue_reason may be null.
  j = task_to_json(t);
  j.erase("preprocess_sql");
  j.erase("cleanup_sql");
  j.erase("knowledge_tags");
  j["issue_reason"] = nullptr;
  back = task_from_json(j);
  CHECK(back.preprocess_sql.empty());
  CHECK_FALSE(back.issue_reason.has_value());
}

TEST_CASE("trajectory codec") {
  Trajectory t;
  t.task_id = "tr-1";
  t.strategy = "Baseline";
  t.tries_used = 2;
  t.steps = {{"think", "SELECT 1", "1"}, {"done", "[DONE]", ""}};
  t.final_sql = "SELECT 2";
  t.passed = true;
  t.tokens_in = 10;
  t.tokens_out = 5;
  t.wall_ms = 100;

  Trajectory back = trajectory_from_json(trajectory_to_json(t));
  CHECK(back.task_id == "tr-1");
  CHECK(back.tries_used == 2);
  REQUIRE(back.steps.size() == 2);
  CHECK(back.steps[1].is_done());
  CHECK(back.final_sql == t.final_sql);
  CHECK(back.passed == t.passed);
  CHECK(back.tokens_in == 10);

  // A verdict with no fix to attach it to is rejected.
  json j = trajectory_to_json(t);
  j["final_sql"] = nullptr;
  CHECK_THROWS_AS(trajectory_from_json(j), JsonError);

  j = trajectory_to_json(t);
  j["tries_used"] = 0;
  CHECK_THROWS_AS(trajectory_from_json(j), JsonError);
}

TEST_CASE("fixture task directory loads sorted and complete") {
  auto tasks = testsupport::load_fixture_tasks();
  CHECK(tasks.size() == 15);
  for (const auto& t : tasks) {
    INFO(t.task_id);
    CHECK(validate_task(t).empty());
  }
}

TEST_CASE("load_tasks handles jsonl, array, manifest, and single object") {
  TempDir dir;
  TaskInstance a = testsupport::simple_task("a", "SELECT 1", "SELECT 2");
  TaskInstance b = testsupport::simple_task("b", "SELECT 3", "SELECT 4");

  auto jsonl = dir.path() / "tasks.jsonl";
  write_text_file(jsonl, task_to_json(a).dump() + "\n" +
                             task_to_json(b).dump() + "\n");
  CHECK(load_tasks(jsonl).size() == 2);

  auto array_file = dir.path() / "tasks_array.json";
  write_text_file(array_file,
                  json::array({task_to_json(a), task_to_json(b)}).dump());
  CHECK(load_tasks(array_file).size() == 2);

  auto single = dir.path() / "one.json";
  save_task_file(a, single);
  auto loaded = load_tasks(single);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].task_id == "a");
  CHECK(load_task_file(single).task_id == "a");

  // Manifest mixing an inline task and a relative path.
  auto manifest = dir.path() / "manifest.json";
  json m;
  m["tasks"] = json::array({task_to_json(b), "one.json"});
  write_text_file(manifest, m.dump());
  loaded = load_tasks(manifest);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].task_id == "b");
  CHECK(loaded[1].task_id == "a");

  // Duplicate ids are rejected wherever they hide.
  auto dup = dir.path() / "dup.jsonl";
  write_text_file(dup, task_to_json(a).dump() + "\n" +
                           task_to_json(a).dump() + "\n");
  CHECK_THROWS_AS(load_tasks(dup), JsonError);
}

TEST_CASE("predictions loader") {
  TempDir dir;
  auto path = dir.path() / "pred.jsonl";
  write_text_file(path,
                  R"({"task_id": "a", "sql": ["SELECT 1", "SELECT 2"]})"
                  "\n"
                  R"({"task_id": "b", "sql": []})"
                  "\n");
  auto preds = load_predictions(path);
  REQUIRE(preds.size() == 2);
  CHECK(preds.at("a").size() == 2);
  CHECK(preds.at("b").empty());

  write_text_file(path,
                  R"({"task_id": "a", "sql": ["SELECT 1"]})"
                  "\n"
                  R"({"task_id": "a", "sql": ["SELECT 2"]})"
                  "\n");
  CHECK_THROWS_AS(load_predictions(path), JsonError);
}

TEST_CASE("trajectory store round-trips through a file") {
  TempDir dir;
  Trajectory t;
  t.task_id = "tr-1";
  t.strategy = "SqlAct";
  t.steps = {{"think", "[DONE]", ""}};
  auto path = dir.path() / "traj.jsonl";
  save_trajectories({t}, path);
  auto back = load_trajectories(path);
  REQUIRE(back.size() == 1);
  CHECK(back[0].task_id == "tr-1");
  CHECK_FALSE(back[0].final_sql.has_value());
}

TEST_CASE("corpus and exclusion fixtures") {
  auto posts = load_corpus(testsupport::fixture_root() / "corpus" /
                           "posts.jsonl");
  REQUIRE(posts.size() == 4);
  CHECK(posts[0].source_id == "post-1");
  CHECK(posts[0].title == "Filtering a product list by category");
  CHECK(posts[2].body.find("    SELECT") != std::string::npos);

  auto excluded = load_exclusion(testsupport::fixture_root() / "corpus" /
                                 "exclusion.txt");
  CHECK(excluded == std::set<std::string>{"post-2"});
}

TEST_CASE("sr report json carries the display percent") {
  SRReport r;
  r.n_total = 530;
  r.n_passed = 206;
  r.sr = 206.0 / 530.0;
  r.per_category[Category::kQueryLike] = {500, 200};
  r.per_category[Category::kManagement] = {30, 6};
  json j = sr_report_to_json(r);
  CHECK(j.at("n_total") == 530);
  CHECK(j.at("n_passed") == 206);
  CHECK(j.at("sr_percent") == "38.87");
  CHECK(j.contains("per_category"));
}

TEST_CASE("text file helpers") {
  TempDir dir;
  auto path = dir.path() / "x.txt";
  write_text_file(path, "hello");
  CHECK(read_text_file(path) == "hello");
  CHECK_THROWS(read_text_file(dir.path() / "missing.txt"));
}
