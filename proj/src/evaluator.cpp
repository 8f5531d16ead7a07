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

#include "sqlfix/evaluator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>
#include <stdexcept>
#include <thread>

#include "sqlfix/sqltext.hpp"

namespace sqlfix {

namespace {

// Result comparison needs complete result sets; the agent-facing row cap
// is a prompt-size concern that must not hide rows here. Beyond this cap
// the comparison refuses instead of silently matching a prefix.
constexpr int kEvalRowCap = 100000;

bool numeric_match(double a, double b, const MatchOptions& opts) {
  if (a == b) return true;
  double diff = std::fabs(a - b);
  if (diff <= opts.float_tol_abs) return true;
  double scale = std::max(std::fabs(a), std::fabs(b));
  return diff <= opts.float_tol_rel * scale;
}

bool parse_number(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end != s.c_str() + s.size()) return false;
  *out = v;
  return true;
}

std::string fold_pattern(const std::string& pattern) {
  std::string lowered = sqltext::to_lower(pattern);
  std::string out;
  bool pending = false;
  for (char c : lowered) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
      continue;
    }
    if (pending) {
      out.push_back(' ');
      pending = false;
    }
    out.push_back(c);
  }
  return out;
}

bool rows_match(const Row& a, const Row& b, const MatchOptions& opts) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!values_match(a[i], b[i], opts)) return false;
  }
  return true;
}

// Augmenting-path search: greedy pairing misses valid assignments when
// tolerance makes one row match several candidates.
bool kuhn_augment(std::size_t i, const std::vector<std::vector<char>>& adj,
                  std::vector<int>* ref_owner, std::vector<char>* visited) {
  for (std::size_t j = 0; j < adj[i].size(); ++j) {
    if (!adj[i][j] || (*visited)[j]) continue;
    (*visited)[j] = 1;
    if ((*ref_owner)[j] < 0 ||
        kuhn_augment(static_cast<std::size_t>((*ref_owner)[j]), adj, ref_owner,
                     visited)) {
      (*ref_owner)[j] = static_cast<int>(i);
      return true;
    }
  }
  return false;
}

std::string row_preview(const Row& r) {
  std::string out = "[";
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i) out += ", ";
    out += render_value(r[i]);
  }
  return out + "]";
}

struct ExecSummary {
  bool ok = false;
  std::string failure;                 // engine message when !ok
  std::optional<ExecObservation> last_rows;
};

// Runs prediction statements one at a time so a failure names the
// statement that broke and row-bearing output is tracked per statement.
ExecSummary run_statements(Sandbox& sandbox, Session& session,
                           const std::vector<std::string>& stmts,
                           const ExecLimits& limits) {
  ExecSummary summary;
  for (std::size_t i = 0; i < stmts.size(); ++i) {
    ExecObservation obs = sandbox.execute(session, stmts[i], limits);
    if (obs.status == ExecStatus::kError || obs.status == ExecStatus::kTimeout) {
      summary.failure = fmt::format(
          "statement {}: {}", i + 1,
          obs.error_text.value_or(to_string(obs.status)));
      return summary;
    }
    if (obs.status == ExecStatus::kRows) summary.last_rows = std::move(obs);
  }
  summary.ok = true;
  return summary;
}

ExecLimits eval_limits(const ExecLimits& base) {
  ExecLimits out = base;
  out.row_cap = kEvalRowCap;
  return out;
}

CaseOutcome text_constraint_case(const TestCase& test_case,
                                 const std::vector<std::string>& predicted) {
  CaseOutcome out;
  out.kind = test_case.kind;
  std::string joined;
  for (const auto& s : predicted) {
    if (!joined.empty()) joined += " ; ";
    joined += s;
  }
  std::string normalized = sqltext::normalize_for_match(joined);
  bool want = test_case.kind == TestKind::kMustContain;
  for (const auto& pattern : test_case.patterns) {
    bool found = normalized.find(fold_pattern(pattern)) != std::string::npos;
    if (found != want) {
      out.passed = false;
      out.detail = want ? fmt::format("missing pattern: {}", pattern)
                        : fmt::format("forbidden pattern present: {}", pattern);
      return out;
    }
  }
  out.passed = true;
  return out;
}

}  // namespace

bool values_match(const Value& a, const Value& b, const MatchOptions& opts) {
  bool a_null = std::holds_alternative<std::monostate>(a);
  bool b_null = std::holds_alternative<std::monostate>(b);
  if (a_null || b_null) return a_null && b_null;

  bool a_int = std::holds_alternative<std::int64_t>(a);
  bool b_int = std::holds_alternative<std::int64_t>(b);
  if (a_int && b_int) return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);

  bool a_num = a_int || std::holds_alternative<double>(a);
  bool b_num = b_int || std::holds_alternative<double>(b);
  auto as_double = [](const Value& v) {
    return std::holds_alternative<std::int64_t>(v)
               ? static_cast<double>(std::get<std::int64_t>(v))
               : std::get<double>(v);
  };
  if (a_num && b_num) return numeric_match(as_double(a), as_double(b), opts);

  if (!a_num && !b_num)
    return std::get<std::string>(a) == std::get<std::string>(b);

  // Engines disagree on whether e.g. an aggregate comes back typed or as
  // text; a fully numeric string gets one numeric comparison attempt.
  const std::string& text = std::get<std::string>(a_num ? b : a);
  double parsed;
  if (!parse_number(text, &parsed)) return false;
  return numeric_match(parsed, as_double(a_num ? a : b), opts);
}

MatchResult soft_result_match(const std::vector<Row>& pred_rows,
                              const std::vector<Row>& ref_rows,
                              const MatchOptions& opts) {
  auto width_of = [](const std::vector<Row>& rows, const char* name) {
    if (rows.empty()) return std::size_t{0};
    std::size_t w = rows[0].size();
    for (const auto& r : rows) {
      if (r.size() != w)
        throw std::invalid_argument(
            fmt::format("soft_result_match: ragged {} rows", name));
    }
    return w;
  };
  std::size_t pred_w = width_of(pred_rows, "predicted");
  std::size_t ref_w = width_of(ref_rows, "reference");

  MatchResult result;
  if (pred_rows.size() != ref_rows.size()) {
    result.detail = fmt::format("row count {} != {}", pred_rows.size(),
                                ref_rows.size());
    return result;
  }
  if (pred_rows.empty()) {
    result.matched = true;
    return result;
  }
  if (pred_w != ref_w) {
    result.detail = fmt::format("column count {} != {}", pred_w, ref_w);
    return result;
  }

  if (opts.ordered) {
    for (std::size_t i = 0; i < pred_rows.size(); ++i) {
      if (!rows_match(pred_rows[i], ref_rows[i], opts)) {
        result.detail = fmt::format("row {}: {} != {}", i + 1,
                                    row_preview(pred_rows[i]),
                                    row_preview(ref_rows[i]));
        return result;
      }
    }
    result.matched = true;
    return result;
  }

  std::vector<std::vector<char>> adj(pred_rows.size(),
                                     std::vector<char>(ref_rows.size(), 0));
  for (std::size_t i = 0; i < pred_rows.size(); ++i) {
    for (std::size_t j = 0; j < ref_rows.size(); ++j) {
      adj[i][j] = rows_match(pred_rows[i], ref_rows[j], opts) ? 1 : 0;
    }
  }
  std::vector<int> ref_owner(ref_rows.size(), -1);
  for (std::size_t i = 0; i < pred_rows.size(); ++i) {
    std::vector<char> visited(ref_rows.size(), 0);
    if (!kuhn_augment(i, adj, &ref_owner, &visited)) {
      result.detail =
          fmt::format("unmatched row {}", row_preview(pred_rows[i]));
      return result;
    }
  }
  result.matched = true;
  return result;
}

CaseOutcome run_test_case(Sandbox& sandbox, Session& session,
                          const TestCase& test_case, bool requires_order,
                          const std::vector<std::string>& predicted_sql,
                          const ExecLimits& limits) {
  CaseOutcome out;
  out.kind = test_case.kind;

  if (test_case.kind == TestKind::kMustContain ||
      test_case.kind == TestKind::kMustNotContain) {
    return text_constraint_case(test_case, predicted_sql);
  }

  ExecLimits run_limits = eval_limits(limits);
  MatchOptions match_opts;
  match_opts.ordered = requires_order;

  switch (test_case.kind) {
    case TestKind::kExecOk: {
      ExecSummary summary =
          run_statements(sandbox, session, predicted_sql, run_limits);
      out.passed = summary.ok;
      out.detail = summary.failure;
      break;
    }
    case TestKind::kResultMatch: {
      ExecSummary summary =
          run_statements(sandbox, session, predicted_sql, run_limits);
      if (!summary.ok) {
        out.detail = summary.failure;
        break;
      }
      if (!summary.last_rows.has_value()) {
        out.detail = "prediction produced no result set";
        break;
      }
      if (summary.last_rows->truncated) {
        out.detail = "result exceeds comparison cap";
        break;
      }
      std::vector<Row> pred_rows = std::move(summary.last_rows->rows);

      // The reference must see the same post-preprocess state the
      // prediction saw, not whatever the prediction mutated.
      try {
        sandbox.reset(session);
      } catch (const SandboxError& e) {
        out.detail = fmt::format("environment: {}", e.what());
        break;
      }
      ExecObservation ref =
          sandbox.execute(session, test_case.reference_sql, run_limits);
      if (ref.status != ExecStatus::kRows) {
        out.detail = fmt::format(
            "reference failed: {}",
            ref.error_text.value_or("no result set"));
        break;
      }
      if (ref.truncated) {
        out.detail = "reference exceeds comparison cap";
        break;
      }
      MatchResult match = soft_result_match(pred_rows, ref.rows, match_opts);
      out.passed = match.matched;
      out.detail = match.detail;
      break;
    }
    case TestKind::kStateProbe: {
      ExecSummary summary =
          run_statements(sandbox, session, predicted_sql, run_limits);
      if (!summary.ok) {
        out.detail = summary.failure;
        break;
      }
      ExecObservation probe =
          sandbox.execute(session, test_case.probe_sql, run_limits);
      if (probe.status != ExecStatus::kRows) {
        out.detail = fmt::format("probe failed: {}",
                                 probe.error_text.value_or("no result set"));
        break;
      }
      if (test_case.expected_scalar.has_value()) {
        if (probe.rows.size() != 1 || probe.rows[0].empty()) {
          out.detail = fmt::format("probe returned {} rows, expected 1 scalar",
                                   probe.rows.size());
          break;
        }
        if (!values_match(probe.rows[0][0], *test_case.expected_scalar,
                          match_opts)) {
          out.detail = fmt::format("probe value {} != expected {}",
                                   render_value(probe.rows[0][0]),
                                   render_value(*test_case.expected_scalar));
          break;
        }
        out.passed = true;
      } else {
        MatchResult match = soft_result_match(
            probe.rows, test_case.expected.value_or(std::vector<Row>{}),
            match_opts);
        out.passed = match.matched;
        out.detail = match.detail;
      }
      break;
    }
    default:
      out.detail = "unreachable";
      break;
  }
  return out;
}

TaskOutcome evaluate_task(Sandbox& sandbox, const TaskInstance& task,
                          const std::vector<std::string>& predicted_sql,
                          const EvalOptions& opts) {
  if (predicted_sql.empty())
    throw std::invalid_argument("evaluate_task: empty prediction");

  TaskOutcome outcome;
  outcome.task_id = task.task_id;

  std::unique_ptr<Session> session;
  try {
    session = sandbox.open_session(task, opts.isolation);
  } catch (const SandboxError& e) {
    CaseOutcome c;
    c.kind = task.eval_script.test_cases.empty()
                 ? TestKind::kExecOk
                 : task.eval_script.test_cases.front().kind;
    c.passed = false;
    c.detail = fmt::format("setup: {}", e.what());
    outcome.per_case.push_back(c);
    outcome.passed = false;
    return outcome;
  }

  bool all_passed = true;
  for (const auto& test_case : task.eval_script.test_cases) {
    bool executes = test_case.kind == TestKind::kResultMatch ||
                    test_case.kind == TestKind::kStateProbe ||
                    test_case.kind == TestKind::kExecOk;
    CaseOutcome c;
    if (executes) {
      try {
        sandbox.reset(*session);
        c = run_test_case(sandbox, *session, test_case,
                          task.eval_script.requires_order, predicted_sql,
                          opts.limits);
      } catch (const SandboxError& e) {
        c.kind = test_case.kind;
        c.passed = false;
        c.detail = fmt::format("environment: {}", e.what());
      }
    } else {
      c = run_test_case(sandbox, *session, test_case,
                        task.eval_script.requires_order, predicted_sql,
                        opts.limits);
    }
    all_passed = all_passed && c.passed;
    outcome.per_case.push_back(std::move(c));
  }
  outcome.passed = all_passed;
  sandbox.close_session(*session);
  return outcome;
}

RedTeamResult red_team_check(Sandbox& sandbox, const TaskInstance& task,
                             const EvalOptions& opts) {
  RedTeamResult result;
  auto violations = validate_task(task);
  if (!violations.empty()) {
    result.reason = fmt::format("invalid task: {}", violations.front());
    return result;
  }
  TaskOutcome solution = evaluate_task(sandbox, task, task.solution_sql, opts);
  TaskOutcome issue = evaluate_task(sandbox, task, task.issue_sql, opts);
  result.solution_passes = solution.passed;
  result.issue_fails = !issue.passed;
  result.valid = result.solution_passes && result.issue_fails;
  if (!result.valid) {
    std::vector<std::string> reasons;
    if (!result.solution_passes) {
      std::string why = "solution rejected";
      for (const auto& c : solution.per_case) {
        if (!c.passed) {
          why += fmt::format(" ({}: {})", to_string(c.kind), c.detail);
          break;
        }
      }
      reasons.push_back(why);
    }
    if (!result.issue_fails) reasons.push_back("issue not caught");
    for (std::size_t i = 0; i < reasons.size(); ++i) {
      if (i) result.reason += "; ";
      result.reason += reasons[i];
    }
  }
  return result;
}

DatasetResult evaluate_dataset(
    Sandbox& sandbox, const std::vector<TaskInstance>& tasks,
    const std::map<std::string, std::vector<std::string>>& predictions,
    const EvalOptions& opts) {
  {
    std::set<std::string> seen;
    for (const auto& t : tasks) {
      if (!seen.insert(t.task_id).second)
        throw std::invalid_argument(
            fmt::format("evaluate_dataset: duplicate task_id '{}'", t.task_id));
    }
  }

  DatasetResult result;
  result.outcomes.resize(tasks.size());

  auto eval_one = [&](std::size_t i) {
    const TaskInstance& task = tasks[i];
    auto it = predictions.find(task.task_id);
    if (it == predictions.end() || it->second.empty()) {
      TaskOutcome missing;
      missing.task_id = task.task_id;
      CaseOutcome c;
      c.kind = TestKind::kExecOk;
      c.passed = false;
      c.detail = "missing prediction";
      missing.per_case.push_back(c);
      missing.passed = false;
      result.outcomes[i] = std::move(missing);
      return;
    }
    result.outcomes[i] = evaluate_task(sandbox, task, it->second, opts);
  };

  int workers = std::max(1, opts.workers);
  if (workers == 1 || tasks.size() < 2) {
    for (std::size_t i = 0; i < tasks.size(); ++i) eval_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::size_t n = std::min(static_cast<std::size_t>(workers), tasks.size());
    pool.reserve(n);
    for (std::size_t w = 0; w < n; ++w) {
      pool.emplace_back([&]() {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) return;
          eval_one(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  SRReport& report = result.report;
  report.n_total = static_cast<int>(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto& cat = report.per_category[tasks[i].category];
    cat.n_total += 1;
    if (result.outcomes[i].passed) {
      report.n_passed += 1;
      cat.n_passed += 1;
    }
  }
  report.sr = report.n_total > 0
                  ? static_cast<double>(report.n_passed) / report.n_total
                  : 0.0;
  return result;
}

}  // namespace sqlfix
