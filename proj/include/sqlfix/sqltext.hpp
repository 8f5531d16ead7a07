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

#pragma once

#include <string>
#include <string_view>
#include <vector>

// Lexical helpers for SQL text. These are not a SQL parser: they only
// track enough state (string literals, quoted identifiers, dollar quotes,
// comments) to split statements and strip comments without corrupting
// literals. Works for the SQLite and PostgreSQL flavors we execute plus
// the MySQL backtick form.
namespace sqlfix::sqltext {

// Removes -- line comments and /* */ block comments (nested, as in
// PostgreSQL), replacing each with a single space. String literals and
// quoted identifiers pass through untouched.
std::string strip_comments(std::string_view sql);

// Splits on top-level semicolons. Comment-only or blank segments are
// dropped; the returned statements keep their original text (trimmed,
// no trailing semicolon).
std::vector<std::string> split_statements(std::string_view sql);

// Number of non-blank statements in the text.
std::size_t count_statements(std::string_view sql);

// Canonical form for constraint matching: comments stripped, ASCII
// case-folded, whitespace runs collapsed to single spaces, trimmed.
std::string normalize_for_match(std::string_view sql);

// Whitespace tokenization (runs collapsed). Shared by the corpus stats
// and the offline token accounting.
std::vector<std::string> tokenize_ws(std::string_view text);
std::size_t count_tokens_ws(std::string_view text);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with_keyword(std::string_view sql, std::string_view keyword);

// First keyword of the statement (lowercased), "" when blank.
std::string leading_keyword(std::string_view sql);

}  // namespace sqlfix::sqltext
