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
// Wire formats. Task files, trajectory stores, prediction files, corpus
// records, and exclusion lists all pass through here so field names stay
// consistent across the toolkit.

#ifndef SQLFIX_JSONIO_HPP_
#define SQLFIX_JSONIO_HPP_

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlfix/domain.hpp"

namespace sqlfix::jsonio {

// Raised on malformed input; the message names the offending field.
class JsonError : public std::runtime_error {
 public:
  explicit JsonError(const std::string& what) : std::runtime_error(what) {}
};

nlohmann::json value_to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);

nlohmann::json row_to_json(const Row& r);
Row row_from_json(const nlohmann::json& j);

nlohmann::json test_case_to_json(const TestCase& tc);
TestCase test_case_from_json(const nlohmann::json& j);

nlohmann::json eval_script_to_json(const EvalScript& s);
EvalScript eval_script_from_json(const nlohmann::json& j);

nlohmann::json task_to_json(const TaskInstance& t);
TaskInstance task_from_json(const nlohmann::json& j);

nlohmann::json step_to_json(const Step& s);
Step step_from_json(const nlohmann::json& j);

nlohmann::json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& j);

nlohmann::json plan_to_json(const FunctionalPlan& p);
FunctionalPlan plan_from_json(const nlohmann::json& j);

nlohmann::json sr_report_to_json(const SRReport& r);

// Task datasets. A path may be a directory of *.json task files, a
// single task file, a .jsonl file with one task per line, or a manifest
// {"tasks": [...]} whose entries are inline tasks or relative paths.
// Duplicate task_id anywhere in a dataset is an error.
std::vector<TaskInstance> load_tasks(const std::filesystem::path& path);
TaskInstance load_task_file(const std::filesystem::path& path);
void save_task_file(const TaskInstance& t, const std::filesystem::path& path);

// Predictions: JSONL of {"task_id": ..., "sql": [...]}. Duplicate
// task_id is an error; tasks without an entry count as failed upstream.
std::map<std::string, std::vector<std::string>> load_predictions(
    const std::filesystem::path& path);

// Trajectory store: JSONL, one record per trajectory.
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path);
void save_trajectories(const std::vector<Trajectory>& ts,
                       const std::filesystem::path& path);

struct CorpusPost {
  std::string source_id;
  std::string title;
  std::string body;
};

// Corpus: JSONL of {"source_id", "title", "body"}.
std::vector<CorpusPost> load_corpus(const std::filesystem::path& path);

// Exclusion list: one identifier per line; '#' starts a comment.
std::set<std::string> load_exclusion(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

}  // namespace sqlfix::jsonio

#endif  // SQLFIX_JSONIO_HPP_
