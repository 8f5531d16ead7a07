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
#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "sqlfix/evaluator.hpp"
#include "sqlfix/jsonio.hpp"
#include "sqlfix/rewind.hpp"
#include "support/fixtures.hpp"

using namespace sqlfix;
using testsupport::fixture_root;
using testsupport::ShopEnv;
using testsupport::simple_task;

namespace {

GymDatabase shop_db() {
  GymDatabase db;
  db.db_ref = "shop";
  db.dialect = Dialect::kEmbeddedRef;
  return db;
}

// A proposal whose test case separates the filtered query from the
// unfiltered one; mechanically sound against the shop data.
const char* kGoodProposal =
    R"({"issue_sql": ["SELECT name, price FROM products"],
        "issue_reason": "missing category filter",
        "category": "QueryLike",
        "eval_script": {"requires_order": false, "test_cases": [
          {"kind": "ResultMatch",
           "reference_sql": "SELECT name, price FROM products WHERE category = 'tools'"}]}})";

const std::vector<std::string> kSolution = {
    "SELECT name, price FROM products WHERE category = 'tools'"};

}  // namespace

TEST_CASE("sql spans come from fences and indented runs") {
  SUBCASE("a sql fence is trusted regardless of content") {
    auto spans = extract_sql_spans(
        "Try this:\n```sql\nSELECT 1\n```\nworks for me");
    REQUIRE(spans.size() == 1);
    CHECK(spans[0] == "SELECT 1");
  }
  SUBCASE("the fence info string is case-insensitive") {
    auto spans = extract_sql_spans("```SQL\nSELECT 2\n```");
    REQUIRE(spans.size() == 1);
    CHECK(spans[0] == "SELECT 2");
  }
  SUBCASE("an unlabeled fence counts only when it opens with a keyword") {
    auto spans = extract_sql_spans(
        "```\nUPDATE t SET x = 1\n```\nand\n```\nnot sql at all\n```");
    REQUIRE(spans.size() == 1);
    CHECK(spans[0] == "UPDATE t SET x = 1");
  }
  SUBCASE("foreign-language fences are ignored") {
    CHECK(extract_sql_spans("```python\nprint(1)\n```").empty());
  }
  SUBCASE("four-space indents form one block, blank lines included") {
    auto spans = extract_sql_spans(
        "Indent it:\n"
        "    SELECT product_id, COUNT(*) FROM orders\n"
        "    GROUP BY product_id\n"
        "done\n");
    REQUIRE(spans.size() == 1);
    CHECK(spans[0] ==
          "SELECT product_id, COUNT(*) FROM orders\nGROUP BY product_id");
  }
  SUBCASE("tab indents work too") {
    auto spans = extract_sql_spans("\tDELETE FROM t WHERE id = 1\n");
    REQUIRE(spans.size() == 1);
    CHECK(spans[0] == "DELETE FROM t WHERE id = 1");
  }
  SUBCASE("indented prose is not SQL") {
    CHECK(extract_sql_spans("    print('hello')\n").empty());
  }
  SUBCASE("duplicate spans collapse") {
    auto spans = extract_sql_spans(
        "```sql\nSELECT 1\n```\nagain\n```sql\nSELECT 1\n```");
    CHECK(spans.size() == 1);
  }
  SUBCASE("an unterminated fence yields nothing") {
    CHECK(extract_sql_spans("```sql\nSELECT 1").empty());
  }
  SUBCASE("plain prose yields nothing") {
    CHECK(extract_sql_spans("No code here, just opinions.").empty());
  }
}

TEST_CASE("adaptation asks for a rewrite against the live schema") {
  ScriptedBackend backend("m");
  backend.add_rule({"Rewrite the SQL below", "Schema:\nCREATE TABLE wares",
                    "SQL:\nSELECT name FROM prods"},
                   "```sql\nSELECT name FROM wares\n```");
  PromptSet prompts = default_prompts();
  RewindConfig config;
  std::int64_t tin = 0;
  std::int64_t tout = 0;

  auto adapted = adapt_sql("SELECT name FROM prods", "CREATE TABLE wares",
                           backend, prompts, config, &tin, &tout);
  REQUIRE(adapted.ok());
  CHECK(*adapted.value == "SELECT name FROM wares");
  CHECK(tin > 0);
  CHECK(tout > 0);

  // One attempt only; a fence-less reply is a final failure.
  backend.push_response("no fence here");
  auto failed = adapt_sql("SELECT 2", "CREATE TABLE other", backend, prompts,
                          config, &tin, &tout);
  REQUIRE_FALSE(failed.ok());
  CHECK(failed.error->message == "no ```sql fence found");
}

TEST_CASE("the solution gate wants real rows and leaves no trace") {
  ShopEnv env;
  TaskInstance probe = simple_task("gate-probe", "SELECT 1", "SELECT 1");
  auto session = env.sandbox.open_session(probe);
  ExecLimits limits;

  SUBCASE("a selecting solution passes") {
    GateResult g = solution_gate(env.sandbox, *session,
                                 {"SELECT name FROM products"}, limits);
    CHECK(g.ok);
    CHECK(g.reason.empty());
  }
  SUBCASE("execution errors are reported") {
    GateResult g = solution_gate(env.sandbox, *session,
                                 {"SELECT * FROM missing"}, limits);
    CHECK_FALSE(g.ok);
    CHECK(g.reason == "exec error: no such table: missing");
  }
  SUBCASE("zero rows is a null result") {
    GateResult g = solution_gate(env.sandbox, *session,
                                 {"SELECT name FROM products WHERE 1 = 0"},
                                 limits);
    CHECK_FALSE(g.ok);
    CHECK(g.reason == "null result");
  }
  SUBCASE("an all-null first row is a null result") {
    GateResult g =
        solution_gate(env.sandbox, *session, {"SELECT NULL, NULL"}, limits);
    CHECK_FALSE(g.ok);
    CHECK(g.reason == "null result");
  }
  SUBCASE("statements that only mutate are rejected") {
    GateResult g = solution_gate(env.sandbox, *session,
                                 {"UPDATE products SET price = 0"}, limits);
    CHECK_FALSE(g.ok);
    CHECK(g.reason == "null result");
  }
  SUBCASE("the gate resets the session afterwards") {
    GateResult g = solution_gate(
        env.sandbox, *session,
        {"INSERT INTO customers (id, name, city) VALUES (99, 'X', 'Y')",
         "SELECT name FROM customers"},
        limits);
    CHECK(g.ok);
    ExecObservation after = env.sandbox.execute(
        *session, "SELECT COUNT(*) FROM customers", limits);
    REQUIRE(after.rows.size() == 1);
    CHECK(std::get<std::int64_t>(after.rows[0][0]) == 3);
  }
  env.sandbox.close_session(*session);
}

TEST_CASE("mining walks posts, adapts spans, and gates them") {
  ShopEnv env;
  ScriptedBackend backend("m");
  backend.add_rule(
      {"Rewrite the SQL below", "SELECT name, price FROM products"},
      "```sql\nSELECT name, price FROM products WHERE category = 'tools'\n```");
  backend.add_rule({"Rewrite the SQL below", "DELETE FROM orders"},
                   "```sql\nDELETE FROM orders\n```");
  backend.add_rule({"Rewrite the SQL below", "COUNT(*)"},
                   "```sql\nSELECT product_id, COUNT(*) FROM orders GROUP "
                   "BY product_id\n```");

  auto corpus = jsonio::load_corpus(fixture_root() / "corpus" / "posts.jsonl");
  REQUIRE(corpus.size() == 4);
  PromptSet prompts = default_prompts();
  RewindConfig config;

  MineReport report = mine_solution_sql(corpus, shop_db(), env.sandbox,
                                        backend, prompts, config);

  REQUIRE(report.accepted.size() == 2);
  CHECK(report.accepted[0].source_id == "post-1");
  CHECK(report.accepted[0].solution_sql ==
        std::vector<std::string>{
            "SELECT name, price FROM products WHERE category = 'tools'"});
  CHECK(report.accepted[1].source_id == "post-3");

  REQUIRE(report.rejects.size() == 2);
  CHECK(report.rejects[0].source_id == "post-2");
  CHECK(report.rejects[0].stage == "gate");
  CHECK(report.rejects[0].reason == "null result");
  CHECK(report.rejects[1].source_id == "post-4");
  CHECK(report.rejects[1].stage == "extract");
  CHECK(report.rejects[1].reason == "no SQL spans");
}

TEST_CASE("issue synthesis accepts the first mechanically sound proposal") {
  ShopEnv env;
  ScriptedBackend backend("m");
  backend.push_response(kGoodProposal);
  backend.push_response("YES\nthe script separates them");
  PromptSet prompts = default_prompts();
  RewindConfig config;
  std::int64_t tin = 0;
  std::int64_t tout = 0;

  IssueOutcome out = synthesize_issue(kSolution, shop_db(), env.sandbox,
                                      backend, prompts, config, &tin, &tout);
  REQUIRE(out.triple.has_value());
  CHECK(out.triple->issue_sql ==
        std::vector<std::string>{"SELECT name, price FROM products"});
  CHECK(out.triple->issue_reason == "missing category filter");
  CHECK(out.triple->category == Category::kQueryLike);
  CHECK(out.triple->iterations == 1);
  REQUIRE(out.triple->eval_script.test_cases.size() == 1);
  CHECK(out.triple->eval_script.test_cases[0].kind == TestKind::kResultMatch);
  CHECK(tin > 0);
  CHECK(backend.served() == 2);
}

TEST_CASE("unusable proposals burn iterations, not the pipeline") {
  ShopEnv env;
  PromptSet prompts = default_prompts();
  RewindConfig config;
  config.max_iter = 2;

  SUBCASE("a parse failure is retried") {
    ScriptedBackend backend("m");
    backend.push_response("I refuse to answer with JSON");
    backend.push_response(kGoodProposal);
    backend.push_response("YES");
    IssueOutcome out =
        synthesize_issue(kSolution, shop_db(), env.sandbox, backend, prompts,
                         config, nullptr, nullptr);
    REQUIRE(out.triple.has_value());
    CHECK(out.triple->iterations == 2);
  }
  SUBCASE("a coherence NO is retried") {
    ScriptedBackend backend("m");
    backend.push_response(kGoodProposal);
    backend.push_response("NO\nthe reason is off");
    backend.push_response(kGoodProposal);
    backend.push_response("YES");
    IssueOutcome out =
        synthesize_issue(kSolution, shop_db(), env.sandbox, backend, prompts,
                         config, nullptr, nullptr);
    REQUIRE(out.triple.has_value());
    CHECK(out.triple->iterations == 2);
  }
  SUBCASE("an issue the script cannot catch is rejected by execution") {
    config.max_iter = 1;
    ScriptedBackend backend("m");
    // Identical issue and solution: the test case cannot separate them.
    backend.push_response(
        R"({"issue_sql": ["SELECT name, price FROM products WHERE category = 'tools'"],
            "eval_script": {"test_cases": [
              {"kind": "ResultMatch",
               "reference_sql": "SELECT name, price FROM products WHERE category = 'tools'"}]}})");
    backend.push_response("YES");
    IssueOutcome out =
        synthesize_issue(kSolution, shop_db(), env.sandbox, backend, prompts,
                         config, nullptr, nullptr);
    CHECK_FALSE(out.triple.has_value());
    CHECK(out.reject_reason == "issue not caught");
  }
  SUBCASE("a proposal without issue SQL is a parse failure") {
    config.max_iter = 1;
    ScriptedBackend backend("m");
    backend.push_response(
        R"({"eval_script": {"test_cases": [
            {"kind": "ResultMatch", "reference_sql": "SELECT 1"}]}})");
    IssueOutcome out =
        synthesize_issue(kSolution, shop_db(), env.sandbox, backend, prompts,
                         config, nullptr, nullptr);
    CHECK_FALSE(out.triple.has_value());
    CHECK(out.reject_reason == "proposal parse failure: issue_sql missing");
  }
  SUBCASE("a structurally invalid proposal is reported with the violation") {
    config.max_iter = 1;
    ScriptedBackend backend("m");
    backend.push_response(
        R"({"issue_sql": ["SELECT 2"],
            "eval_script": {"test_cases": [
              {"kind": "ResultMatch", "reference_sql": ""}]}})");
    IssueOutcome out =
        synthesize_issue(kSolution, shop_db(), env.sandbox, backend, prompts,
                         config, nullptr, nullptr);
    CHECK_FALSE(out.triple.has_value());
    CHECK(out.reject_reason.rfind("proposal invalid:", 0) == 0);
  }
}

TEST_CASE("user query drafting is gated by the consistency check") {
  TaskInstance draft = simple_task(
      "draft-1", "SELECT name, price FROM products",
      "SELECT name, price FROM products WHERE category = 'tools'");
  draft.issue_reason = "missing category filter";
  PromptSet prompts = default_prompts();
  RewindConfig config;
  config.max_query_rounds = 2;

  SUBCASE("an affirmed draft is returned with its round count") {
    ScriptedBackend backend("m");
    backend.add_rule({"Write the message a database user would post",
                      "Reason:\nmissing category filter"},
                     "My report lists every product instead of just tools.");
    backend.add_rule({"Check whether this user message is consistent",
                      "My report lists every product instead of just tools."},
                     "YES\nmatches the artifacts");
    QueryOutcome out =
        generate_user_query(draft, "CREATE TABLE products (...)", backend,
                            prompts, config, nullptr, nullptr);
    REQUIRE(out.user_query.has_value());
    CHECK(*out.user_query ==
          "My report lists every product instead of just tools.");
    CHECK(out.rounds == 1);
  }
  SUBCASE("empty drafts are retried") {
    ScriptedBackend backend("m");
    backend.push_response("   \n  ");
    backend.push_response("Second try draft.");
    backend.push_response("YES");
    QueryOutcome out = generate_user_query(draft, "schema", backend, prompts,
                                           config, nullptr, nullptr);
    REQUIRE(out.user_query.has_value());
    CHECK(out.rounds == 2);
  }
  SUBCASE("persistent inconsistency exhausts the rounds") {
    ScriptedBackend backend("m");
    backend.push_response("Draft one.");
    backend.push_response("NO\nwrong symptom");
    backend.push_response("Draft two.");
    backend.push_response("no, still wrong");
    QueryOutcome out = generate_user_query(draft, "schema", backend, prompts,
                                           config, nullptr, nullptr);
    CHECK_FALSE(out.user_query.has_value());
    CHECK(out.reject_reason == "consistency rejected");
  }
}

TEST_CASE("the full pipeline produces a verified instance from the corpus") {
  ShopEnv env;
  auto backend = ScriptedBackend::from_replay_file(
      "rewind", fixture_root() / "replay" / "rewind_replay.json");
  auto corpus = jsonio::load_corpus(fixture_root() / "corpus" / "posts.jsonl");
  auto exclusion =
      jsonio::load_exclusion(fixture_root() / "corpus" / "exclusion.txt");
  CHECK(exclusion == std::set<std::string>{"post-2"});
  PromptSet prompts = default_prompts();
  RewindConfig config;

  BuildReport report =
      build_instances(corpus, {shop_db()}, exclusion, env.sandbox, *backend,
                      prompts, config);

  REQUIRE(report.instances.size() == 1);
  const GymInstance& inst = report.instances[0];
  CHECK(inst.task.task_id == "gym-0001");
  CHECK(inst.task.db_ref == "shop");
  CHECK(inst.task.issue_sql ==
        std::vector<std::string>{"SELECT name, price FROM products"});
  CHECK(inst.task.solution_sql ==
        std::vector<std::string>{
            "SELECT name, price FROM products WHERE category = 'tools'"});
  CHECK(inst.task.user_query ==
        "My price list query is supposed to cover only the tools category, "
        "but it returns every product we sell.");
  CHECK(inst.provenance.source_id == "post-1");
  CHECK(inst.provenance.db_ref == "shop");
  CHECK(inst.provenance.issue_iterations == 1);
  CHECK(inst.provenance.query_rounds == 1);

  // The first post satisfies the default target; the walk stops there.
  CHECK(report.posts_seen == 1);
  CHECK(report.candidates_extracted == 1);
  CHECK(report.tokens_in > 0);
  CHECK(report.tokens_out > 0);

  CHECK(validate_task(inst.task).empty());
  EvalOptions opts;
  RedTeamResult rt = red_team_check(env.sandbox, inst.task, opts);
  CHECK(rt.valid);
}

TEST_CASE("the pipeline respects exclusions and the target size") {
  ShopEnv env;
  auto backend = ScriptedBackend::from_replay_file(
      "rewind", fixture_root() / "replay" / "rewind_replay.json");
  auto corpus = jsonio::load_corpus(fixture_root() / "corpus" / "posts.jsonl");
  auto exclusion =
      jsonio::load_exclusion(fixture_root() / "corpus" / "exclusion.txt");
  PromptSet prompts = default_prompts();
  RewindConfig config;
  config.target_size = 2;

  BuildReport report =
      build_instances(corpus, {shop_db()}, exclusion, env.sandbox, *backend,
                      prompts, config);

  REQUIRE(report.instances.size() == 2);
  CHECK(report.instances[0].task.task_id == "gym-0001");
  CHECK(report.instances[1].task.task_id == "gym-0002");
  CHECK(report.instances[0].provenance.source_id == "post-1");
  CHECK(report.instances[1].provenance.source_id == "post-3");
  CHECK(report.posts_seen == 3);
  CHECK(report.posts_excluded == 1);

  bool excluded_recorded = false;
  for (const auto& r : report.rejects) {
    if (r.source_id == "post-2" && r.stage == "excluded") {
      excluded_recorded = true;
      CHECK(r.reason == "source on the exclusion list");
    }
  }
  CHECK(excluded_recorded);
}

TEST_CASE("an excluded database rejects every pairing") {
  ShopEnv env;
  ScriptedBackend backend("m");
  auto corpus = jsonio::load_corpus(fixture_root() / "corpus" / "posts.jsonl");
  PromptSet prompts = default_prompts();
  RewindConfig config;

  BuildReport report = build_instances(
      corpus, {shop_db()}, ExclusionList{"shop"}, env.sandbox, backend,
      prompts, config);

  CHECK(report.instances.empty());
  CHECK(backend.served() == 0);
  int db_rejects = 0;
  for (const auto& r : report.rejects) {
    if (r.stage == "excluded" && r.db_ref == "shop") {
      db_rejects += 1;
      CHECK(r.reason == "database on the exclusion list");
    }
  }
  CHECK(db_rejects > 0);
  CHECK(report.posts_seen == 4);
}

TEST_CASE("a zero target is refused") {
  ShopEnv env;
  ScriptedBackend backend("m");
  RewindConfig config;
  config.target_size = 0;
  CHECK_THROWS_AS(build_instances({}, {shop_db()}, {}, env.sandbox, backend,
                                  default_prompts(), config),
                  std::invalid_argument);
}
