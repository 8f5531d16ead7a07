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

#include "sqlfix/jsonio.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "sqlfix/sqltext.hpp"

namespace sqlfix::jsonio {

namespace {

const nlohmann::json& need(const nlohmann::json& j, const char* key,
                           const char* ctx) {
  if (!j.is_object() || !j.contains(key))
    throw JsonError(fmt::format("{}: missing field '{}'", ctx, key));
  return j.at(key);
}

std::string need_string(const nlohmann::json& j, const char* key,
                        const char* ctx) {
  const auto& v = need(j, key, ctx);
  if (!v.is_string())
    throw JsonError(fmt::format("{}: field '{}' must be a string", ctx, key));
  return v.get<std::string>();
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* key,
                                     const char* ctx, bool required) {
  if (!j.contains(key)) {
    if (required)
      throw JsonError(fmt::format("{}: missing field '{}'", ctx, key));
    return {};
  }
  const auto& v = j.at(key);
  if (!v.is_array())
    throw JsonError(
        fmt::format("{}: field '{}' must be a list of strings", ctx, key));
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string())
      throw JsonError(
          fmt::format("{}: field '{}' must be a list of strings", ctx, key));
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

nlohmann::json value_to_json(const Value& v) {
  if (std::holds_alternative<std::monostate>(v)) return nullptr;
  if (std::holds_alternative<std::int64_t>(v)) return std::get<std::int64_t>(v);
  if (std::holds_alternative<double>(v)) return std::get<double>(v);
  return std::get<std::string>(v);
}

Value value_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_number_integer() || j.is_number_unsigned())
    return static_cast<std::int64_t>(j.get<std::int64_t>());
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return static_cast<std::int64_t>(j.get<bool>() ? 1 : 0);
  throw JsonError("value: must be null, number, or string");
}

nlohmann::json row_to_json(const Row& r) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& v : r) out.push_back(value_to_json(v));
  return out;
}

Row row_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw JsonError("row: must be a list");
  Row out;
  for (const auto& e : j) out.push_back(value_from_json(e));
  return out;
}

nlohmann::json test_case_to_json(const TestCase& tc) {
  nlohmann::json j;
  j["kind"] = to_string(tc.kind);
  switch (tc.kind) {
    case TestKind::kResultMatch:
      j["reference_sql"] = tc.reference_sql;
      break;
    case TestKind::kStateProbe:
      j["probe_sql"] = tc.probe_sql;
      if (tc.expected_scalar.has_value()) {
        j["expected_scalar"] = value_to_json(*tc.expected_scalar);
      } else if (tc.expected.has_value()) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : *tc.expected) rows.push_back(row_to_json(r));
        j["expected"] = rows;
      }
      break;
    case TestKind::kMustContain:
    case TestKind::kMustNotContain:
      j["patterns"] = tc.patterns;
      break;
    case TestKind::kExecOk:
      break;
  }
  return j;
}

TestCase test_case_from_json(const nlohmann::json& j) {
  const char* ctx = "test_case";
  TestCase tc;
  std::string kind = need_string(j, "kind", ctx);
  auto k = test_kind_from_string(kind);
  if (!k) throw JsonError(fmt::format("{}: unknown kind '{}'", ctx, kind));
  tc.kind = *k;
  switch (tc.kind) {
    case TestKind::kResultMatch:
      tc.reference_sql = need_string(j, "reference_sql", ctx);
      break;
    case TestKind::kStateProbe: {
      tc.probe_sql = need_string(j, "probe_sql", ctx);
      bool has_rows = j.contains("expected");
      bool has_scalar = j.contains("expected_scalar");
      if (has_rows == has_scalar)
        throw JsonError(fmt::format(
            "{}: StateProbe needs exactly one of 'expected' or "
            "'expected_scalar'",
            ctx));
      if (has_scalar) {
        tc.expected_scalar = value_from_json(j.at("expected_scalar"));
      } else {
        const auto& rows = j.at("expected");
        if (!rows.is_array())
          throw JsonError(fmt::format("{}: 'expected' must be a list", ctx));
        std::vector<Row> expected;
        for (const auto& r : rows) expected.push_back(row_from_json(r));
        tc.expected = std::move(expected);
      }
      break;
    }
    case TestKind::kMustContain:
    case TestKind::kMustNotContain:
      tc.patterns = string_list(j, "patterns", ctx, true);
      break;
    case TestKind::kExecOk:
      break;
  }
  return tc;
}

nlohmann::json eval_script_to_json(const EvalScript& s) {
  nlohmann::json j;
  j["requires_order"] = s.requires_order;
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& tc : s.test_cases) cases.push_back(test_case_to_json(tc));
  j["test_cases"] = cases;
  return j;
}

EvalScript eval_script_from_json(const nlohmann::json& j) {
  const char* ctx = "eval_script";
  EvalScript s;
  if (j.contains("requires_order")) {
    if (!j.at("requires_order").is_boolean())
      throw JsonError(
          fmt::format("{}: 'requires_order' must be a boolean", ctx));
    s.requires_order = j.at("requires_order").get<bool>();
  }
  const auto& cases = need(j, "test_cases", ctx);
  if (!cases.is_array())
    throw JsonError(fmt::format("{}: 'test_cases' must be a list", ctx));
  for (const auto& c : cases) s.test_cases.push_back(test_case_from_json(c));
  return s;
}

nlohmann::json task_to_json(const TaskInstance& t) {
  nlohmann::json j;
  j["task_id"] = t.task_id;
  j["dialect"] = to_string(t.dialect);
  j["db_ref"] = t.db_ref;
  j["category"] = to_string(t.category);
  j["user_query"] = t.user_query;
  j["issue_sql"] = t.issue_sql;
  j["solution_sql"] = t.solution_sql;
  j["preprocess_sql"] = t.preprocess_sql;
  j["cleanup_sql"] = t.cleanup_sql;
  j["eval_script"] = eval_script_to_json(t.eval_script);
  if (t.issue_reason.has_value()) j["issue_reason"] = *t.issue_reason;
  j["knowledge_tags"] = t.knowledge_tags;
  return j;
}

TaskInstance task_from_json(const nlohmann::json& j) {
  const char* ctx = "task";
  TaskInstance t;
  t.task_id = need_string(j, "task_id", ctx);
  std::string dialect = need_string(j, "dialect", ctx);
  auto d = dialect_from_string(dialect);
  if (!d)
    throw JsonError(fmt::format("{}: unknown dialect '{}'", ctx, dialect));
  t.dialect = *d;
  t.db_ref = need_string(j, "db_ref", ctx);
  std::string category = need_string(j, "category", ctx);
  auto c = category_from_string(category);
  if (!c)
    throw JsonError(fmt::format("{}: unknown category '{}'", ctx, category));
  t.category = *c;
  t.user_query = need_string(j, "user_query", ctx);
  t.issue_sql = string_list(j, "issue_sql", ctx, true);
  t.solution_sql = string_list(j, "solution_sql", ctx, true);
  t.preprocess_sql = string_list(j, "preprocess_sql", ctx, false);
  t.cleanup_sql = string_list(j, "cleanup_sql", ctx, false);
  t.eval_script = eval_script_from_json(need(j, "eval_script", ctx));
  if (j.contains("issue_reason") && !j.at("issue_reason").is_null())
    t.issue_reason = need_string(j, "issue_reason", ctx);
  t.knowledge_tags = string_list(j, "knowledge_tags", ctx, false);
  return t;
}

nlohmann::json step_to_json(const Step& s) {
  nlohmann::json j;
  j["thought"] = s.thought;
  j["action"] = s.action;
  j["observation"] = s.observation;
  return j;
}

Step step_from_json(const nlohmann::json& j) {
  const char* ctx = "step";
  Step s;
  s.thought = need_string(j, "thought", ctx);
  s.action = need_string(j, "action", ctx);
  s.observation = need_string(j, "observation", ctx);
  return s;
}

nlohmann::json trajectory_to_json(const Trajectory& t) {
  nlohmann::json j;
  j["task_id"] = t.task_id;
  j["strategy"] = t.strategy;
  j["tries_used"] = t.tries_used;
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps) steps.push_back(step_to_json(s));
  j["steps"] = steps;
  j["final_sql"] = t.final_sql.has_value() ? nlohmann::json(*t.final_sql)
                                           : nlohmann::json(nullptr);
  j["passed"] = t.passed.has_value() ? nlohmann::json(*t.passed)
                                     : nlohmann::json(nullptr);
  j["tokens_in"] = t.tokens_in;
  j["tokens_out"] = t.tokens_out;
  j["wall_ms"] = t.wall_ms;
  return j;
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
  const char* ctx = "trajectory";
  Trajectory t;
  t.task_id = need_string(j, "task_id", ctx);
  t.strategy = need_string(j, "strategy", ctx);
  const auto& tries = need(j, "tries_used", ctx);
  if (!tries.is_number_integer() || tries.get<int>() < 1)
    throw JsonError(fmt::format("{}: 'tries_used' must be a positive integer", ctx));
  t.tries_used = tries.get<int>();
  const auto& steps = need(j, "steps", ctx);
  if (!steps.is_array())
    throw JsonError(fmt::format("{}: 'steps' must be a list", ctx));
  for (const auto& s : steps) t.steps.push_back(step_from_json(s));
  if (j.contains("final_sql") && !j.at("final_sql").is_null())
    t.final_sql = need_string(j, "final_sql", ctx);
  if (j.contains("passed") && !j.at("passed").is_null()) {
    if (!j.at("passed").is_boolean())
      throw JsonError(fmt::format("{}: 'passed' must be a boolean", ctx));
    t.passed = j.at("passed").get<bool>();
  }
  if (t.passed.has_value() && !t.final_sql.has_value())
    throw JsonError(
        fmt::format("{}: 'passed' is only valid with 'final_sql' set", ctx));
  auto count = [&](const char* key) -> std::int64_t {
    if (!j.contains(key)) return 0;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw JsonError(
          fmt::format("{}: '{}' must be a nonnegative integer", ctx, key));
    return v.get<std::int64_t>();
  };
  t.tokens_in = count("tokens_in");
  t.tokens_out = count("tokens_out");
  t.wall_ms = count("wall_ms");
  return t;
}

nlohmann::json plan_to_json(const FunctionalPlan& p) {
  nlohmann::json j;
  j["steps"] = p.steps;
  return j;
}

FunctionalPlan plan_from_json(const nlohmann::json& j) {
  FunctionalPlan p;
  p.steps = string_list(j, "steps", "plan", true);
  if (p.steps.empty()) throw JsonError("plan: needs >=1 step");
  return p;
}

nlohmann::json sr_report_to_json(const SRReport& r) {
  nlohmann::json j;
  j["n_total"] = r.n_total;
  j["n_passed"] = r.n_passed;
  j["sr"] = r.sr;
  j["sr_percent"] = format_percent(r.n_passed, r.n_total);
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [cat, counts] : r.per_category) {
    per[to_string(cat)] = {{"n_total", counts.n_total},
                           {"n_passed", counts.n_passed}};
  }
  j["per_category"] = per;
  return j;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw JsonError(fmt::format("cannot read {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw JsonError(fmt::format("cannot write {}", path.string()));
  out << content;
}

namespace {

nlohmann::json parse_json(const std::string& text, const std::string& where) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw JsonError(fmt::format("{}: {}", where, e.what()));
  }
}

void check_unique_ids(const std::vector<TaskInstance>& tasks) {
  std::set<std::string> seen;
  for (const auto& t : tasks) {
    if (!seen.insert(t.task_id).second)
      throw JsonError(fmt::format("dataset: duplicate task_id '{}'", t.task_id));
  }
}

}  // namespace

TaskInstance load_task_file(const std::filesystem::path& path) {
  auto j = parse_json(read_text_file(path), path.string());
  try {
    return task_from_json(j);
  } catch (const JsonError& e) {
    throw JsonError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<TaskInstance> load_tasks(const std::filesystem::path& path) {
  std::vector<TaskInstance> tasks;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json")
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) tasks.push_back(load_task_file(f));
    check_unique_ids(tasks);
    return tasks;
  }
  if (path.extension() == ".jsonl") {
    std::istringstream in(read_text_file(path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (sqltext::trim(line).empty()) continue;
      auto j = parse_json(line, fmt::format("{}:{}", path.string(), lineno));
      tasks.push_back(task_from_json(j));
    }
    check_unique_ids(tasks);
    return tasks;
  }
  auto j = parse_json(read_text_file(path), path.string());
  if (j.is_array()) {
    for (const auto& e : j) tasks.push_back(task_from_json(e));
  } else if (j.is_object() && j.contains("tasks")) {
    const auto& list = j.at("tasks");
    if (!list.is_array())
      throw JsonError(fmt::format("{}: 'tasks' must be a list", path.string()));
    for (const auto& e : list) {
      if (e.is_string()) {
        tasks.push_back(load_task_file(path.parent_path() / e.get<std::string>()));
      } else {
        tasks.push_back(task_from_json(e));
      }
    }
  } else {
    tasks.push_back(task_from_json(j));
  }
  check_unique_ids(tasks);
  return tasks;
}

void save_task_file(const TaskInstance& t, const std::filesystem::path& path) {
  write_text_file(path, task_to_json(t).dump(2) + "\n");
}

std::map<std::string, std::vector<std::string>> load_predictions(
    const std::filesystem::path& path) {
  std::map<std::string, std::vector<std::string>> preds;
  std::istringstream in(read_text_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (sqltext::trim(line).empty()) continue;
    std::string where = fmt::format("{}:{}", path.string(), lineno);
    auto j = parse_json(line, where);
    std::string task_id = need_string(j, "task_id", "prediction");
    auto sql = string_list(j, "sql", "prediction", true);
    if (!preds.emplace(task_id, std::move(sql)).second)
      throw JsonError(fmt::format("{}: duplicate task_id '{}'", where, task_id));
  }
  return preds;
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path& path) {
  std::vector<Trajectory> out;
  std::istringstream in(read_text_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (sqltext::trim(line).empty()) continue;
    auto j = parse_json(line, fmt::format("{}:{}", path.string(), lineno));
    out.push_back(trajectory_from_json(j));
  }
  return out;
}

void save_trajectories(const std::vector<Trajectory>& ts,
                       const std::filesystem::path& path) {
  std::string buf;
  for (const auto& t : ts) buf += trajectory_to_json(t).dump() + "\n";
  write_text_file(path, buf);
}

std::vector<CorpusPost> load_corpus(const std::filesystem::path& path) {
  std::vector<CorpusPost> posts;
  std::istringstream in(read_text_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (sqltext::trim(line).empty()) continue;
    auto j = parse_json(line, fmt::format("{}:{}", path.string(), lineno));
    CorpusPost p;
    p.source_id = need_string(j, "source_id", "corpus");
    p.title = j.contains("title") ? need_string(j, "title", "corpus") : "";
    p.body = need_string(j, "body", "corpus");
    posts.push_back(std::move(p));
  }
  return posts;
}

std::set<std::string> load_exclusion(const std::filesystem::path& path) {
  std::set<std::string> out;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string id = sqltext::trim(line);
    if (!id.empty()) out.insert(id);
  }
  return out;
}

}  // namespace sqlfix::jsonio
