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
// Uniform completion interface over model backends, plus the parsers for
// the tagged output the agent emits. Parsers are total: they return a
// value or a typed error, never an unstructured failure.

#ifndef SQLFIX_LLM_HPP_
#define SQLFIX_LLM_HPP_

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace sqlfix {

struct ChatMessage {
  std::string role;  // "system", "user", "assistant"
  std::string content;
};

struct CompletionRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::vector<std::string> stop_sequences;
  std::string backend_id;
};

struct Completion {
  std::string text;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  int attempts = 1;
};

class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& what) : std::runtime_error(what) {}
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  // Throws BackendError on failure (after retries, where applicable).
  virtual Completion complete(const CompletionRequest& request) = 0;
};

// Deterministic replay backend. Substring rules are checked first against
// the full prompt text; otherwise responses come off the ordinal queue.
// Token counts are whitespace token counts so accounting stays testable
// offline. Never retries.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::string id);

  void push_response(std::string text);
  void add_rule(std::vector<std::string> contains, std::string response);

  // Replay file: {"responses": [...]} and/or
  // {"rules": [{"contains": [...], "response": "..."}]}.
  static std::shared_ptr<ScriptedBackend> from_replay_file(
      std::string id, const std::filesystem::path& path);

  std::string id() const override;
  Completion complete(const CompletionRequest& request) override;

  int served() const;

 private:
  struct Rule {
    std::vector<std::string> contains;
    std::string response;
  };

  std::string id_;
  mutable std::mutex mu_;
  std::deque<std::string> queue_;
  std::vector<Rule> rules_;
  int served_ = 0;
};

struct RemoteSettings {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env;  // name of the env var holding the bearer key
  int max_attempts = 3;
  int backoff_ms = 250;  // doubles per retry
  int max_inflight = 4;
  int timeout_s = 60;
};

// Chat-completion HTTP client. Retries connect failures, 429, and 5xx
// with exponential backoff up to max_attempts; other statuses fail fast.
class RemoteBackend : public Backend {
 public:
  RemoteBackend(std::string id, RemoteSettings settings);

  std::string id() const override;
  Completion complete(const CompletionRequest& request) override;

 private:
  std::string id_;
  RemoteSettings settings_;
  std::mutex mu_;
  std::condition_variable inflight_cv_;
  int inflight_ = 0;
};

class BackendRegistry {
 public:
  void add(std::shared_ptr<Backend> backend);
  bool has(const std::string& id) const;
  std::shared_ptr<Backend> get(const std::string& id) const;  // throws

  // Routes by request.backend_id. Empty messages is a precondition error.
  Completion complete(const CompletionRequest& request);

  // Config: {"backends": {"<id>": {"kind": "Scripted", "replay": path}
  //                     | {"kind": "Remote", "base_url": ..., ...}}}.
  // Relative replay paths resolve against the config file's directory.
  static BackendRegistry from_config_file(const std::filesystem::path& path);

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Backend>> backends_;
};

struct ParseError {
  std::string message;
  std::string raw;  // the text that failed to parse
};

template <typename T>
struct ParseOutcome {
  std::optional<T> value;
  std::optional<ParseError> error;

  bool ok() const { return value.has_value(); }

  static ParseOutcome success(T v) {
    ParseOutcome o;
    o.value = std::move(v);
    return o;
  }
  static ParseOutcome failure(std::string message, std::string raw) {
    ParseOutcome o;
    o.error = ParseError{std::move(message), std::move(raw)};
    return o;
  }
};

// Content of the first well-formed <tag>...</tag> pair, trimmed. The
// sentinel "[DONE]" inside an action tag comes back verbatim. tag must be
// "thought" or "action" (anything else is a programming error and throws
// std::invalid_argument).
ParseOutcome<std::string> parse_tagged(const std::string& text,
                                       const std::string& tag);

// Body of the first ```sql fence, trimmed of surrounding whitespace.
ParseOutcome<std::string> extract_sql_fence(const std::string& text);

// First JSON object in the text: a ```json fence if present, otherwise
// the first balanced {...} span that parses.
ParseOutcome<nlohmann::json> extract_json_object(const std::string& text);

}  // namespace sqlfix

#endif  // SQLFIX_LLM_HPP_
