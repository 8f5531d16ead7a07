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

#include "sqlfix/sqltext.hpp"

#include <cctype>

namespace sqlfix::sqltext {

namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Reads a $tag$ opener at position i, returns the full delimiter
// ("$tag$") or "" if this is not a dollar quote.
std::string read_dollar_tag(std::string_view s, std::size_t i) {
  if (s[i] != '$') return {};
  std::size_t j = i + 1;
  while (j < s.size() && is_ident_char(s[j])) ++j;
  if (j < s.size() && s[j] == '$') return std::string(s.substr(i, j - i + 1));
  return {};
}

enum class LexState { Normal, Single, Double, Backtick, Dollar };

// Walks the text once, invoking emit(c, in_comment) per character with
// comments flagged. Quote state is shared by every public helper.
template <typename Emit>
void scan(std::string_view sql, Emit emit) {
  LexState state = LexState::Normal;
  std::string dollar_tag;
  int block_depth = 0;
  bool line_comment = false;

  for (std::size_t i = 0; i < sql.size(); ++i) {
    char c = sql[i];
    char next = i + 1 < sql.size() ? sql[i + 1] : '\0';

    if (line_comment) {
      if (c == '\n') {
        line_comment = false;
        emit(c, false);
      } else {
        emit(c, true);
      }
      continue;
    }
    if (block_depth > 0) {
      if (c == '*' && next == '/') {
        --block_depth;
        emit(c, true);
        emit(next, true);
        ++i;
      } else if (c == '/' && next == '*') {
        ++block_depth;
        emit(c, true);
        emit(next, true);
        ++i;
      } else {
        emit(c, true);
      }
      continue;
    }

    switch (state) {
      case LexState::Normal:
        if (c == '-' && next == '-') {
          line_comment = true;
          emit(c, true);
          emit(next, true);
          ++i;
        } else if (c == '/' && next == '*') {
          block_depth = 1;
          emit(c, true);
          emit(next, true);
          ++i;
        } else if (c == '\'') {
          state = LexState::Single;
          emit(c, false);
        } else if (c == '"') {
          state = LexState::Double;
          emit(c, false);
        } else if (c == '`') {
          state = LexState::Backtick;
          emit(c, false);
        } else if (c == '$') {
          dollar_tag = read_dollar_tag(sql, i);
          if (!dollar_tag.empty()) {
            state = LexState::Dollar;
            for (char t : dollar_tag) emit(t, false);
            i += dollar_tag.size() - 1;
          } else {
            emit(c, false);
          }
        } else {
          emit(c, false);
        }
        break;
      case LexState::Single:
        if (c == '\'' && next == '\'') {
          emit(c, false);
          emit(next, false);
          ++i;
        } else {
          if (c == '\'') state = LexState::Normal;
          emit(c, false);
        }
        break;
      case LexState::Double:
        if (c == '"' && next == '"') {
          emit(c, false);
          emit(next, false);
          ++i;
        } else {
          if (c == '"') state = LexState::Normal;
          emit(c, false);
        }
        break;
      case LexState::Backtick:
        if (c == '`') state = LexState::Normal;
        emit(c, false);
        break;
      case LexState::Dollar:
        if (c == '$' && sql.substr(i, dollar_tag.size()) == dollar_tag) {
          for (char t : dollar_tag) emit(t, false);
          i += dollar_tag.size() - 1;
          state = LexState::Normal;
        } else {
          emit(c, false);
        }
        break;
    }
  }
}

}  // namespace

std::string strip_comments(std::string_view sql) {
  std::string out;
  out.reserve(sql.size());
  bool last_was_comment = false;
  scan(sql, [&](char c, bool in_comment) {
    if (in_comment) {
      if (!last_was_comment) out.push_back(' ');
      last_was_comment = true;
    } else {
      out.push_back(c);
      last_was_comment = false;
    }
  });
  return out;
}

std::vector<std::string> split_statements(std::string_view sql) {
  std::vector<std::string> stmts;
  std::string current;
  bool current_has_code = false;
  scan(sql, [&](char c, bool in_comment) {
    if (!in_comment && c == ';') {
      if (current_has_code) stmts.push_back(trim(current));
      current.clear();
      current_has_code = false;
      return;
    }
    current.push_back(c);
    if (!in_comment && !std::isspace(static_cast<unsigned char>(c))) {
      current_has_code = true;
    }
  });
  if (current_has_code) stmts.push_back(trim(current));
  return stmts;
}

std::size_t count_statements(std::string_view sql) {
  return split_statements(sql).size();
}

std::string normalize_for_match(std::string_view sql) {
  std::string stripped = strip_comments(sql);
  std::string out;
  out.reserve(stripped.size());
  bool pending_space = false;
  for (char c : stripped) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> tokenize_ws(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

std::size_t count_tokens_ws(std::string_view text) {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : text) {
    bool ws = std::isspace(static_cast<unsigned char>(c));
    if (!ws && !in_token) ++n;
    in_token = !ws;
  }
  return n;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string leading_keyword(std::string_view sql) {
  std::string stripped = strip_comments(sql);
  std::size_t i = 0;
  while (i < stripped.size() && std::isspace(static_cast<unsigned char>(stripped[i]))) ++i;
  std::size_t start = i;
  while (i < stripped.size() && std::isalpha(static_cast<unsigned char>(stripped[i]))) ++i;
  return to_lower(std::string_view(stripped).substr(start, i - start));
}

bool starts_with_keyword(std::string_view sql, std::string_view keyword) {
  return leading_keyword(sql) == to_lower(keyword);
}

}  // namespace sqlfix::sqltext
