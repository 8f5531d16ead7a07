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
// PostgreSQL executor speaking the v3 wire protocol directly (startup,
// trust/cleartext/md5 auth, simple query, cancel). No client library is
// required. Sessions run inside one transaction and roll back to a
// savepoint between attempts; statement errors are absorbed with a
// per-statement savepoint so one mistake does not abort the episode.

#ifndef SQLFIX_PG_EXECUTOR_HPP_
#define SQLFIX_PG_EXECUTOR_HPP_

#include <memory>
#include <string>

#include "sqlfix/sandbox.hpp"

namespace sqlfix {

struct PgSettings {
  std::string host = "127.0.0.1";
  int port = 5432;
  std::string user = "postgres";
  std::string password;
  std::string dbname;  // empty: the task's db_ref names the database
  int connect_timeout_ms = 5000;
  // After a cancel request, how long to keep waiting for the backend to
  // acknowledge before declaring the connection dead.
  int cancel_grace_ms = 5000;
};

// Overrides from SQLFIX_PG_HOST, SQLFIX_PG_PORT, SQLFIX_PG_USER,
// SQLFIX_PG_PASSWORD, SQLFIX_PG_DB on top of the defaults above, or on
// top of a caller-provided base (environment wins over the base).
PgSettings pg_settings_from_env();
PgSettings pg_settings_from_env(PgSettings base);

// The md5 scheme: "md5" + hex(md5(hex(md5(password + user)) + salt)).
// salt is the 4-byte challenge from the authentication request.
std::string pg_md5_password(const std::string& user,
                            const std::string& password,
                            const std::string& salt);

// Only TransactionRollback is supported: cloning a server-side database
// per episode needs admin rights we do not assume. open() connects and
// starts the episode transaction.
class PgExecutorFactory : public ExecutorFactory {
 public:
  explicit PgExecutorFactory(PgSettings settings);

  std::unique_ptr<Executor> open(const TaskInstance& task,
                                 IsolationMode mode) override;
  IsolationMode default_isolation() const override;

 private:
  PgSettings settings_;
};

}  // namespace sqlfix

#endif  // SQLFIX_PG_EXECUTOR_HPP_
