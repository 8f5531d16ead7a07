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
// Isolated database sessions for debugging episodes. A session opens on a
// clean snapshot of the task's database, runs the task's preprocess SQL,
// and can be reset to that snapshot between attempts.

#ifndef SQLFIX_SANDBOX_HPP_
#define SQLFIX_SANDBOX_HPP_

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqlfix/domain.hpp"

namespace sqlfix {

// TransactionRollback keeps one engine transaction open for the whole
// episode and rolls back to a savepoint; TemplateCopy clones the database
// per episode. Copy mode survives anything, rollback mode is cheaper.
enum class IsolationMode {
  kTransactionRollback,
  kTemplateCopy,
};

std::string to_string(IsolationMode m);
std::optional<IsolationMode> isolation_from_string(const std::string& s);

struct ExecLimits {
  int row_cap = 50;
  int char_cap = 4000;
  int timeout_ms = 30000;
};

enum class ExecStatus { kRows, kAffected, kError, kTimeout };

std::string to_string(ExecStatus s);

struct ExecObservation {
  ExecStatus status = ExecStatus::kError;
  std::vector<std::string> columns;
  std::vector<Row> rows;  // capped at row_cap; truncated marks the cut
  std::optional<std::int64_t> affected_count;
  std::optional<std::string> error_text;
  bool truncated = false;
  std::int64_t elapsed_ms = 0;
};

std::string render_value(const Value& v);

// Text form shown to the agent: status header, column names, tab-separated
// rows, "… truncated" when capped. Errors carry the engine message verbatim.
std::string render_observation(const ExecObservation& obs, int char_cap);

class SandboxError : public std::runtime_error {
 public:
  explicit SandboxError(const std::string& what) : std::runtime_error(what) {}
};

// One open database bound to one session. Implementations wrap a concrete
// engine; all methods are called from a single thread at a time.
class Executor {
 public:
  virtual ~Executor() = default;

  virtual ExecObservation execute(const std::string& sql,
                                  const ExecLimits& limits) = 0;

  // Captures the current state as the reset target. Called once, after
  // preprocess SQL has run.
  virtual void snapshot() = 0;

  // Restores the snapshot state. Throws SandboxError when the mode cannot
  // recover (e.g. a broken transaction under TransactionRollback).
  virtual void reset() = 0;

  // Leaves the episode's isolation scope so cleanup SQL takes effect
  // outside it. No-op for modes without such a scope.
  virtual void end_episode() = 0;

  virtual void close() = 0;

  // True when the episode state is unrecoverable without a reset.
  virtual bool poisoned() const = 0;

  virtual std::string schema_text() = 0;
  virtual std::string table_ddl(const std::string& table) = 0;
};

class ExecutorFactory {
 public:
  virtual ~ExecutorFactory() = default;
  // Opens the raw database for a task; preprocess/snapshot are driven by
  // the sandbox afterwards. Throws SandboxError.
  virtual std::unique_ptr<Executor> open(const TaskInstance& task,
                                         IsolationMode mode) = 0;
  virtual IsolationMode default_isolation() const = 0;
};

struct Session {
  std::string session_id;
  std::string task_id;
  Dialect dialect = Dialect::kEmbeddedRef;
  IsolationMode isolation_mode = IsolationMode::kTemplateCopy;
  std::chrono::system_clock::time_point open_at;
  int statement_count = 0;

  std::unique_ptr<Executor> executor;
  std::vector<std::string> cleanup_sql;
  std::vector<std::string> cleanup_failures;  // recorded, never raised
  bool closed = false;
  std::int64_t db_ms = 0;  // engine time accumulated by this session
};

class Sandbox {
 public:
  void register_executor(Dialect d, std::shared_ptr<ExecutorFactory> factory);
  bool has_executor(Dialect d) const;

  // Runs preprocess SQL in order and snapshots. Throws SandboxError on an
  // unregistered dialect or a preprocess failure (names the 1-based
  // statement index).
  std::unique_ptr<Session> open_session(
      const TaskInstance& task,
      std::optional<IsolationMode> mode = std::nullopt);

  // Rejected after close. Statement count grows by one per call.
  ExecObservation execute(Session& session, const std::string& sql,
                          const ExecLimits& limits = ExecLimits{});

  // Returns the database to the post-preprocess snapshot.
  void reset(Session& session);

  // Cleanup SQL runs best-effort; failures land in session.cleanup_failures.
  // Idempotent.
  void close_session(Session& session);

  std::string schema_text(Session& session);
  std::string table_ddl(Session& session, const std::string& table);

 private:
  std::shared_ptr<ExecutorFactory> factory_for(Dialect d) const;

  mutable std::mutex mu_;
  std::map<Dialect, std::shared_ptr<ExecutorFactory>> factories_;
  std::atomic<int> next_session_{1};
};

}  // namespace sqlfix

#endif  // SQLFIX_SANDBOX_HPP_
