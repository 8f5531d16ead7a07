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
// Prompt templates. Placeholders use {name} syntax: {db_id}, {SCHEMA},
// {USER_ISSUE}, {ISSUE_SQL}, {history}, {turn}, plus per-template extras.
// A bundle is either the built-in "default" or a directory of .txt files
// overriding individual templates.

#ifndef SQLFIX_PROMPTS_HPP_
#define SQLFIX_PROMPTS_HPP_

#include <filesystem>
#include <map>
#include <string>

namespace sqlfix {

struct PromptSet {
  std::string sqlact_turn;
  std::string action_only;  // dual-model mode: SQL from the base model
  std::string final_answer;
  std::string toolact_turn;
  std::string plan_infer;
  std::string rewind_adapt;
  std::string rewind_issue;
  std::string rewind_coherence;
  std::string rewind_user_query;
  std::string rewind_consistency;
};

PromptSet default_prompts();

// Defaults overlaid with <dir>/<template_name>.txt files; absent files
// keep their default.
PromptSet load_prompts(const std::filesystem::path& dir);

// "default" (or empty) is the built-in set; anything else is a directory.
PromptSet prompts_for_bundle(const std::string& bundle_id);

// Replaces each "{key}" whose key is present in vars; unknown braces are
// left untouched so SQL and JSON in templates survive.
std::string render_template(const std::string& tpl,
                            const std::map<std::string, std::string>& vars);

}  // namespace sqlfix

#endif  // SQLFIX_PROMPTS_HPP_
