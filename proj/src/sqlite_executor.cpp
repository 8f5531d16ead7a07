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

#include "sqlfix/sqlite_executor.hpp"

#include <fmt/format.h>
#include <sqlite3.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <set>
#include <system_error>

#include "sqlfix/sqltext.hpp"

namespace sqlfix {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::atomic<std::uint64_t> g_workdir_counter{1};

fs::path make_workdir() {
  fs::path dir = fs::temp_directory_path() /
                 fmt::format("sqlfix-{}-{}", ::getpid(),
                             g_workdir_counter.fetch_add(1));
  fs::create_directories(dir);
  return dir;
}

const std::set<std::string>& txn_keywords() {
  static const std::set<std::string> kw = {"begin",     "commit", "rollback",
                                           "savepoint", "release", "end"};
  return kw;
}

struct Deadline {
  Clock::time_point at;
};

int progress_cb(void* ctx) {
  auto* d = static_cast<Deadline*>(ctx);
  return Clock::now() > d->at ? 1 : 0;
}

bool is_dml(const std::string& keyword) {
  return keyword == "insert" || keyword == "update" || keyword == "delete" ||
         keyword == "replace";
}

class SqliteExecutor : public Executor {
 public:
  SqliteExecutor(fs::path template_path, IsolationMode mode)
      : mode_(mode), workdir_(make_workdir()) {
    work_path_ = workdir_ / "work.db";
    snap_path_ = workdir_ / "snap.db";
    if (!template_path.empty() && fs::exists(template_path))
      fs::copy_file(template_path, work_path_,
                    fs::copy_options::overwrite_existing);
    open_db();
    if (mode_ == IsolationMode::kTransactionRollback)
      exec_internal("BEGIN IMMEDIATE");
  }

  ~SqliteExecutor() override { close(); }

  ExecObservation execute(const std::string& sql,
                          const ExecLimits& limits) override {
    ExecObservation obs;
    auto started = Clock::now();
    auto finish = [&](ExecObservation o) {
      o.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         Clock::now() - started)
                         .count();
      return o;
    };

    if (db_ == nullptr) {
      obs.status = ExecStatus::kError;
      obs.error_text = "database closed";
      return finish(obs);
    }
    if (mode_ == IsolationMode::kTransactionRollback) {
      // The episode transaction is the isolation boundary; agent SQL may
      // not move it.
      for (const auto& stmt : sqltext::split_statements(sql)) {
        if (txn_keywords().count(sqltext::leading_keyword(stmt))) {
          obs.status = ExecStatus::kError;
          obs.error_text =
              "transaction control statements are managed by the sandbox";
          return finish(obs);
        }
      }
    }

    Deadline deadline{started + std::chrono::milliseconds(limits.timeout_ms)};
    sqlite3_progress_handler(db_, 200, progress_cb, &deadline);

    const char* tail = sql.c_str();
    const char* end = tail + sql.size();
    bool have_rows = false;
    std::string last_keyword;
    std::int64_t last_changes = 0;
    bool errored = false;

    while (tail < end) {
      sqlite3_stmt* stmt = nullptr;
      const char* next = nullptr;
      int rc = sqlite3_prepare_v2(db_, tail, static_cast<int>(end - tail),
                                  &stmt, &next);
      if (rc != SQLITE_OK) {
        obs.status = classify_failure(rc, deadline);
        obs.error_text = sqlite3_errmsg(db_);
        errored = true;
        break;
      }
      if (stmt == nullptr) {  // trailing whitespace or comment
        tail = next;
        continue;
      }
      std::string text(tail, next);
      last_keyword = sqltext::leading_keyword(text);
      tail = next;

      int cols = sqlite3_column_count(stmt);
      if (cols > 0) {
        std::vector<std::string> columns;
        columns.reserve(cols);
        for (int i = 0; i < cols; ++i) {
          const char* name = sqlite3_column_name(stmt, i);
          columns.push_back(name ? name : fmt::format("col{}", i));
        }
        std::vector<Row> rows;
        bool truncated = false;
        while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
          if (rows.size() < static_cast<std::size_t>(limits.row_cap)) {
            Row row;
            row.reserve(cols);
            for (int i = 0; i < cols; ++i) row.push_back(read_value(stmt, i));
            rows.push_back(std::move(row));
          } else {
            truncated = true;
            // Keep stepping: later statements in the text may depend on
            // this one finishing.
          }
        }
        if (rc != SQLITE_DONE) {
          obs.status = classify_failure(rc, deadline);
          obs.error_text = sqlite3_errmsg(db_);
          sqlite3_finalize(stmt);
          errored = true;
          break;
        }
        obs.columns = std::move(columns);
        obs.rows = std::move(rows);
        obs.truncated = truncated;
        have_rows = true;
      } else {
        rc = sqlite3_step(stmt);
        if (rc != SQLITE_DONE && rc != SQLITE_ROW) {
          obs.status = classify_failure(rc, deadline);
          obs.error_text = sqlite3_errmsg(db_);
          sqlite3_finalize(stmt);
          errored = true;
          break;
        }
        have_rows = false;
        obs.columns.clear();
        obs.rows.clear();
        obs.truncated = false;
        last_changes = is_dml(last_keyword) ? sqlite3_changes64(db_) : 0;
      }
      sqlite3_finalize(stmt);
    }

    sqlite3_progress_handler(db_, 0, nullptr, nullptr);

    if (!errored) {
      if (have_rows) {
        obs.status = ExecStatus::kRows;
      } else {
        obs.status = ExecStatus::kAffected;
        obs.affected_count = last_changes;
      }
    } else if (mode_ == IsolationMode::kTransactionRollback &&
               sqlite3_get_autocommit(db_) != 0) {
      // The engine rolled the episode transaction back under us; nothing
      // short of a fresh session can restore the snapshot.
      poisoned_ = true;
    }
    return finish(obs);
  }

  void snapshot() override {
    if (mode_ == IsolationMode::kTransactionRollback) {
      exec_internal("SAVEPOINT sp_base");
    } else {
      copy_db(work_path_, snap_path_);
    }
  }

  void reset() override {
    if (mode_ == IsolationMode::kTransactionRollback) {
      if (poisoned_)
        throw SandboxError(
            "session poisoned; reset is not available under "
            "TransactionRollback");
      exec_internal("ROLLBACK TO sp_base");
    } else {
      copy_db(snap_path_, work_path_);
      poisoned_ = false;
    }
  }

  void end_episode() override {
    if (db_ == nullptr) return;
    if (mode_ == IsolationMode::kTransactionRollback &&
        sqlite3_get_autocommit(db_) == 0) {
      exec_internal("ROLLBACK");
    }
  }

  void close() override {
    if (db_ != nullptr) {
      sqlite3_close_v2(db_);
      db_ = nullptr;
    }
    std::error_code ec;
    fs::remove_all(workdir_, ec);
  }

  bool poisoned() const override { return poisoned_; }

  std::string schema_text() override {
    ExecLimits limits;
    limits.row_cap = 1000;
    limits.char_cap = 0;
    ExecObservation obs = execute(
        "SELECT sql FROM sqlite_master WHERE sql IS NOT NULL AND name NOT "
        "LIKE 'sqlite_%' ORDER BY (type != 'table'), name",
        limits);
    if (obs.status != ExecStatus::kRows) return "";
    std::string out;
    for (const auto& row : obs.rows) {
      if (!row.empty() && std::holds_alternative<std::string>(row[0])) {
        out += std::get<std::string>(row[0]);
        out += ";\n";
      }
    }
    return out;
  }

  std::string table_ddl(const std::string& table) override {
    if (db_ == nullptr) return "";
    sqlite3_stmt* stmt = nullptr;
    if (sqlite3_prepare_v2(db_,
                           "SELECT sql FROM sqlite_master WHERE tbl_name = ?1 "
                           "AND sql IS NOT NULL ORDER BY (type != 'table')",
                           -1, &stmt, nullptr) != SQLITE_OK)
      return "";
    sqlite3_bind_text(stmt, 1, table.c_str(), -1, SQLITE_TRANSIENT);
    std::string out;
    while (sqlite3_step(stmt) == SQLITE_ROW) {
      const unsigned char* text = sqlite3_column_text(stmt, 0);
      if (text) {
        out += reinterpret_cast<const char*>(text);
        out += ";\n";
      }
    }
    sqlite3_finalize(stmt);
    return out;
  }

 private:
  static Value read_value(sqlite3_stmt* stmt, int col) {
    switch (sqlite3_column_type(stmt, col)) {
      case SQLITE_INTEGER:
        return static_cast<std::int64_t>(sqlite3_column_int64(stmt, col));
      case SQLITE_FLOAT:
        return sqlite3_column_double(stmt, col);
      case SQLITE_NULL:
        return std::monostate{};
      case SQLITE_BLOB: {
        const void* data = sqlite3_column_blob(stmt, col);
        int n = sqlite3_column_bytes(stmt, col);
        return std::string(static_cast<const char*>(data), n);
      }
      default: {
        const unsigned char* text = sqlite3_column_text(stmt, col);
        return std::string(text ? reinterpret_cast<const char*>(text) : "");
      }
    }
  }

  ExecStatus classify_failure(int rc, const Deadline& deadline) const {
    if (rc == SQLITE_INTERRUPT || Clock::now() > deadline.at)
      return ExecStatus::kTimeout;
    return ExecStatus::kError;
  }

  void open_db() {
    int rc = sqlite3_open_v2(work_path_.string().c_str(), &db_,
                             SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE,
                             nullptr);
    if (rc != SQLITE_OK) {
      std::string msg = db_ ? sqlite3_errmsg(db_) : "open failed";
      if (db_) sqlite3_close_v2(db_);
      db_ = nullptr;
      throw SandboxError(
          fmt::format("cannot open {}: {}", work_path_.string(), msg));
    }
    sqlite3_busy_timeout(db_, 5000);
  }

  void exec_internal(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown error";
      sqlite3_free(err);
      throw SandboxError(fmt::format("{}: {}", sql, msg));
    }
  }

  void copy_db(const fs::path& from, const fs::path& to) {
    if (db_ != nullptr) {
      sqlite3_close_v2(db_);
      db_ = nullptr;
    }
    std::error_code ec;
    if (fs::exists(from)) {
      fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
      if (ec)
        throw SandboxError(fmt::format("copy {} -> {}: {}", from.string(),
                                       to.string(), ec.message()));
    } else {
      fs::remove(to, ec);
    }
    open_db();
  }

  IsolationMode mode_;
  fs::path workdir_;
  fs::path work_path_;
  fs::path snap_path_;
  sqlite3* db_ = nullptr;
  bool poisoned_ = false;
};

}  // namespace

SqliteExecutorFactory::SqliteExecutorFactory(std::filesystem::path template_dir)
    : template_dir_(std::move(template_dir)) {}

std::unique_ptr<Executor> SqliteExecutorFactory::open(const TaskInstance& task,
                                                      IsolationMode mode) {
  fs::path tpl;
  if (!template_dir_.empty()) {
    fs::path with_ext = template_dir_ / (task.db_ref + ".sqlite");
    fs::path verbatim = template_dir_ / task.db_ref;
    if (fs::exists(with_ext))
      tpl = with_ext;
    else if (fs::exists(verbatim) && fs::is_regular_file(verbatim))
      tpl = verbatim;
  }
  return std::make_unique<SqliteExecutor>(tpl, mode);
}

}  // namespace sqlfix
