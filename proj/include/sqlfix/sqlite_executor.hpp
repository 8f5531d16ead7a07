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

#ifndef SQLFIX_SQLITE_EXECUTOR_HPP_
#define SQLFIX_SQLITE_EXECUTOR_HPP_

#include <filesystem>
#include <memory>

#include "sqlfix/sandbox.hpp"

namespace sqlfix {

// Embedded-dialect executor. Every session works on a private file copy,
// so two sessions never see each other regardless of mode; the isolation
// mode decides how reset works (savepoint rollback vs re-copy).
//
// db_ref resolves against template_dir ("<db_ref>.sqlite", then db_ref
// verbatim). A missing template starts the session on an empty database;
// fixtures carry their state in preprocess SQL.
class SqliteExecutorFactory : public ExecutorFactory {
 public:
  explicit SqliteExecutorFactory(std::filesystem::path template_dir = {});

  std::unique_ptr<Executor> open(const TaskInstance& task,
                                 IsolationMode mode) override;
  IsolationMode default_isolation() const override {
    return IsolationMode::kTemplateCopy;
  }

 private:
  std::filesystem::path template_dir_;
};

}  // namespace sqlfix

#endif  // SQLFIX_SQLITE_EXECUTOR_HPP_
