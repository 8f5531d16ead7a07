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

#include "sqlfix/sandbox.hpp"

#include <fmt/format.h>

#include "sqlfix/sqltext.hpp"

namespace sqlfix {

std::string to_string(IsolationMode m) {
  switch (m) {
    case IsolationMode::kTransactionRollback: return "TransactionRollback";
    case IsolationMode::kTemplateCopy: return "TemplateCopy";
  }
  return "TemplateCopy";
}

std::optional<IsolationMode> isolation_from_string(const std::string& s) {
  if (s == "TransactionRollback") return IsolationMode::kTransactionRollback;
  if (s == "TemplateCopy") return IsolationMode::kTemplateCopy;
  return std::nullopt;
}

std::string to_string(ExecStatus s) {
  switch (s) {
    case ExecStatus::kRows: return "Rows";
    case ExecStatus::kAffected: return "Affected";
    case ExecStatus::kError: return "Error";
    case ExecStatus::kTimeout: return "Timeout";
  }
  return "Error";
}

std::string render_value(const Value& v) {
  if (std::holds_alternative<std::monostate>(v)) return "NULL";
  if (std::holds_alternative<std::int64_t>(v))
    return fmt::format("{}", std::get<std::int64_t>(v));
  if (std::holds_alternative<double>(v))
    return fmt::format("{}", std::get<double>(v));
  // Keep the tabular shape: cell text may not break rows or columns.
  std::string out;
  for (char c : std::get<std::string>(v)) {
    if (c == '\t')
      out += "\\t";
    else if (c == '\n')
      out += "\\n";
    else if (c == '\r')
      out += "\\r";
    else
      out.push_back(c);
  }
  return out;
}

std::string render_observation(const ExecObservation& obs, int char_cap) {
  std::string out;
  switch (obs.status) {
    case ExecStatus::kRows: {
      out = fmt::format("Rows ({})\n", obs.rows.size());
      for (std::size_t i = 0; i < obs.columns.size(); ++i) {
        if (i) out.push_back('\t');
        out += obs.columns[i];
      }
      out.push_back('\n');
      for (const auto& row : obs.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
          if (i) out.push_back('\t');
          out += render_value(row[i]);
        }
        out.push_back('\n');
      }
      if (obs.truncated) out += "… truncated\n";
      break;
    }
    case ExecStatus::kAffected:
      out = fmt::format("Affected ({})\n", obs.affected_count.value_or(0));
      break;
    case ExecStatus::kError:
      out = fmt::format("Error\n{}\n", obs.error_text.value_or(""));
      break;
    case ExecStatus::kTimeout:
      out = fmt::format("Timeout\n{}\n", obs.error_text.value_or("statement cancelled"));
      break;
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  if (char_cap > 0 && out.size() > static_cast<std::size_t>(char_cap)) {
    out.resize(static_cast<std::size_t>(char_cap));
    out += "\n… truncated";
  }
  return out;
}

void Sandbox::register_executor(Dialect d,
                                std::shared_ptr<ExecutorFactory> factory) {
  std::lock_guard<std::mutex> lock(mu_);
  factories_[d] = std::move(factory);
}

bool Sandbox::has_executor(Dialect d) const {
  std::lock_guard<std::mutex> lock(mu_);
  return factories_.count(d) > 0;
}

std::shared_ptr<ExecutorFactory> Sandbox::factory_for(Dialect d) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = factories_.find(d);
  if (it == factories_.end())
    throw SandboxError(
        fmt::format("no executor registered for dialect {}", to_string(d)));
  return it->second;
}

std::unique_ptr<Session> Sandbox::open_session(
    const TaskInstance& task, std::optional<IsolationMode> mode) {
  auto factory = factory_for(task.dialect);
  IsolationMode chosen = mode.value_or(factory->default_isolation());

  auto session = std::make_unique<Session>();
  session->session_id = fmt::format("s{}", next_session_.fetch_add(1));
  session->task_id = task.task_id;
  session->dialect = task.dialect;
  session->isolation_mode = chosen;
  session->open_at = std::chrono::system_clock::now();
  session->cleanup_sql = task.cleanup_sql;
  session->executor = factory->open(task, chosen);

  // Preprocess runs with relaxed limits: setup is trusted input and must
  // not be truncated or spuriously timed out.
  ExecLimits setup_limits;
  setup_limits.row_cap = 1;
  setup_limits.timeout_ms = 120000;
  for (std::size_t i = 0; i < task.preprocess_sql.size(); ++i) {
    ExecObservation obs =
        session->executor->execute(task.preprocess_sql[i], setup_limits);
    session->db_ms += obs.elapsed_ms;
    if (obs.status == ExecStatus::kError || obs.status == ExecStatus::kTimeout) {
      std::string msg = obs.error_text.value_or(to_string(obs.status));
      session->executor->close();
      throw SandboxError(
          fmt::format("preprocess failed at statement {}: {}", i + 1, msg));
    }
  }
  session->executor->snapshot();
  return session;
}

ExecObservation Sandbox::execute(Session& session, const std::string& sql,
                                 const ExecLimits& limits) {
  if (session.closed) throw SandboxError("session closed");
  session.statement_count += 1;
  if (session.executor->poisoned()) {
    ExecObservation obs;
    obs.status = ExecStatus::kError;
    obs.error_text = "session poisoned; reset required";
    return obs;
  }
  ExecObservation obs = session.executor->execute(sql, limits);
  session.db_ms += obs.elapsed_ms;
  return obs;
}

void Sandbox::reset(Session& session) {
  if (session.closed) throw SandboxError("session closed");
  session.executor->reset();
  session.statement_count = 0;
}

void Sandbox::close_session(Session& session) {
  if (session.closed) return;
  session.closed = true;
  try {
    session.executor->end_episode();
  } catch (const SandboxError& e) {
    session.cleanup_failures.push_back(e.what());
  }
  ExecLimits limits;
  limits.row_cap = 1;
  for (const auto& stmt : session.cleanup_sql) {
    try {
      ExecObservation obs = session.executor->execute(stmt, limits);
      session.db_ms += obs.elapsed_ms;
      if (obs.status == ExecStatus::kError || obs.status == ExecStatus::kTimeout)
        session.cleanup_failures.push_back(
            fmt::format("{}: {}", sqltext::leading_keyword(stmt),
                        obs.error_text.value_or(to_string(obs.status))));
    } catch (const std::exception& e) {
      session.cleanup_failures.push_back(e.what());
    }
  }
  session.executor->close();
}

std::string Sandbox::schema_text(Session& session) {
  if (session.closed) throw SandboxError("session closed");
  return session.executor->schema_text();
}

std::string Sandbox::table_ddl(Session& session, const std::string& table) {
  if (session.closed) throw SandboxError("session closed");
  return session.executor->table_ddl(table);
}

}  // namespace sqlfix
