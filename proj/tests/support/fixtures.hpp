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
// Shared helpers for the test binaries: temp dirs, fixture loading, and
// an embedded database materialized from the checked-in DDL (no binary
// files live in the repository).

#ifndef SQLFIX_TESTS_SUPPORT_FIXTURES_HPP_
#define SQLFIX_TESTS_SUPPORT_FIXTURES_HPP_

#include <sqlite3.h>
#include <stdlib.h>

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqlfix/domain.hpp"
#include "sqlfix/jsonio.hpp"
#include "sqlfix/sandbox.hpp"
#include "sqlfix/sqlite_executor.hpp"

namespace sqlfix::testsupport {

inline std::filesystem::path fixture_root() {
  return std::filesystem::path(FIXTURE_DIR);
}

class TempDir {
 public:
  TempDir() {
    std::string tpl =
        (std::filesystem::temp_directory_path() / "sqlfix-test-XXXXXX")
            .string();
    std::vector<char> buf(tpl.begin(), tpl.end());
    buf.push_back('\0');
    if (::mkdtemp(buf.data()) == nullptr) {
      throw std::runtime_error("mkdtemp failed");
    }
    path_ = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void build_sqlite_db(const std::filesystem::path& db_path,
                            const std::string& sql) {
  sqlite3* db = nullptr;
  if (sqlite3_open(db_path.string().c_str(), &db) != SQLITE_OK) {
    std::string msg = db != nullptr ? sqlite3_errmsg(db) : "open failed";
    sqlite3_close(db);
    throw std::runtime_error("cannot create " + db_path.string() + ": " + msg);
  }
  char* err = nullptr;
  if (sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err != nullptr ? err : "exec failed";
    sqlite3_free(err);
    sqlite3_close(db);
    throw std::runtime_error("cannot populate " + db_path.string() + ": " +
                             msg);
  }
  sqlite3_close(db);
}

// Renders the checked-in shop DDL into <dir>/shop.sqlite and returns the
// file path.
inline std::filesystem::path materialize_shop_db(
    const std::filesystem::path& dir) {
  std::string ddl =
      jsonio::read_text_file(fixture_root() / "databases" / "shop.sql");
  std::filesystem::path path = dir / "shop.sqlite";
  build_sqlite_db(path, ddl);
  return path;
}

inline void register_sqlite(Sandbox& sandbox,
                            const std::filesystem::path& template_dir) {
  sandbox.register_executor(
      Dialect::kEmbeddedRef,
      std::make_shared<SqliteExecutorFactory>(template_dir));
}

// A sandbox over a fresh copy of the shop database, torn down with the
// temp dir.
struct ShopEnv {
  TempDir dir;
  Sandbox sandbox;

  ShopEnv() {
    materialize_shop_db(dir.path());
    register_sqlite(sandbox, dir.path());
  }
};

inline std::vector<TaskInstance> load_fixture_tasks() {
  return jsonio::load_tasks(fixture_root() / "tasks");
}

inline const TaskInstance& task_by_id(const std::vector<TaskInstance>& tasks,
                                      const std::string& id) {
  for (const auto& t : tasks) {
    if (t.task_id == id) return t;
  }
  throw std::runtime_error("no fixture task named " + id);
}

// Minimal well-formed shop task; tests adjust fields as needed.
inline TaskInstance simple_task(const std::string& id,
                                const std::string& issue,
                                const std::string& solution) {
  TaskInstance t;
  t.task_id = id;
  t.dialect = Dialect::kEmbeddedRef;
  t.db_ref = "shop";
  t.category = Category::kQueryLike;
  t.user_query = "the query returns the wrong rows";
  t.issue_sql = {issue};
  t.solution_sql = {solution};
  TestCase tc;
  tc.kind = TestKind::kResultMatch;
  tc.reference_sql = solution;
  t.eval_script.test_cases.push_back(tc);
  return t;
}

}  // namespace sqlfix::testsupport

#endif  // SQLFIX_TESTS_SUPPORT_FIXTURES_HPP_
