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

#include "sqlfix/llm.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "sqlfix/jsonio.hpp"
#include "sqlfix/sqltext.hpp"

namespace sqlfix {

namespace {

std::int64_t prompt_tokens(const std::vector<ChatMessage>& messages) {
  std::int64_t n = 0;
  for (const auto& m : messages)
    n += static_cast<std::int64_t>(sqltext::count_tokens_ws(m.content));
  return n;
}

std::string concat_prompt(const std::vector<ChatMessage>& messages) {
  std::string out;
  for (const auto& m : messages) {
    out += m.content;
    out.push_back('\n');
  }
  return out;
}

}  // namespace

ScriptedBackend::ScriptedBackend(std::string id) : id_(std::move(id)) {}

void ScriptedBackend::push_response(std::string text) {
  std::lock_guard<std::mutex> lock(mu_);
  queue_.push_back(std::move(text));
}

void ScriptedBackend::add_rule(std::vector<std::string> contains,
                               std::string response) {
  std::lock_guard<std::mutex> lock(mu_);
  rules_.push_back(Rule{std::move(contains), std::move(response)});
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_replay_file(
    std::string id, const std::filesystem::path& path) {
  auto backend = std::make_shared<ScriptedBackend>(std::move(id));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(jsonio::read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw BackendError(fmt::format("replay file {}: {}", path.string(), e.what()));
  }
  if (j.contains("responses")) {
    for (const auto& r : j.at("responses")) {
      if (!r.is_string())
        throw BackendError(
            fmt::format("replay file {}: responses must be strings",
                        path.string()));
      backend->push_response(r.get<std::string>());
    }
  }
  if (j.contains("rules")) {
    for (const auto& r : j.at("rules")) {
      std::vector<std::string> contains;
      for (const auto& c : r.at("contains")) contains.push_back(c.get<std::string>());
      backend->add_rule(std::move(contains), r.at("response").get<std::string>());
    }
  }
  return backend;
}

std::string ScriptedBackend::id() const { return id_; }

Completion ScriptedBackend::complete(const CompletionRequest& request) {
  std::lock_guard<std::mutex> lock(mu_);
  std::string prompt = concat_prompt(request.messages);
  std::string text;
  bool found = false;
  for (const auto& rule : rules_) {
    bool all = true;
    for (const auto& needle : rule.contains) {
      if (prompt.find(needle) == std::string::npos) {
        all = false;
        break;
      }
    }
    if (all) {
      text = rule.response;
      found = true;
      break;
    }
  }
  if (!found) {
    if (queue_.empty())
      throw BackendError(fmt::format("scripted backend '{}' exhausted", id_));
    text = std::move(queue_.front());
    queue_.pop_front();
  }
  served_ += 1;

  Completion c;
  c.text = std::move(text);
  c.tokens_in = prompt_tokens(request.messages);
  c.tokens_out = static_cast<std::int64_t>(sqltext::count_tokens_ws(c.text));
  c.attempts = 1;
  return c;
}

int ScriptedBackend::served() const {
  std::lock_guard<std::mutex> lock(mu_);
  return served_;
}

RemoteBackend::RemoteBackend(std::string id, RemoteSettings settings)
    : id_(std::move(id)), settings_(std::move(settings)) {}

std::string RemoteBackend::id() const { return id_; }

Completion RemoteBackend::complete(const CompletionRequest& request) {
  nlohmann::json body;
  body["model"] = settings_.model;
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages)
    messages.push_back({{"role", m.role}, {"content", m.content}});
  body["messages"] = messages;
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;
  std::string payload = body.dump();

  httplib::Headers headers;
  if (!settings_.api_key_env.empty()) {
    const char* key = std::getenv(settings_.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      throw BackendError(fmt::format("backend '{}': env var {} is not set",
                                     id_, settings_.api_key_env));
    headers.emplace("Authorization", fmt::format("Bearer {}", key));
  }

  {
    std::unique_lock<std::mutex> lock(mu_);
    inflight_cv_.wait(lock,
                      [&] { return inflight_ < settings_.max_inflight; });
    inflight_ += 1;
  }
  struct InflightGuard {
    RemoteBackend* b;
    ~InflightGuard() {
      std::lock_guard<std::mutex> lock(b->mu_);
      b->inflight_ -= 1;
      b->inflight_cv_.notify_one();
    }
  } guard{this};

  std::string last_failure;
  for (int attempt = 1; attempt <= settings_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          settings_.backoff_ms << (attempt - 2)));
    }
    httplib::Client client(settings_.base_url);
    client.set_connection_timeout(settings_.timeout_s, 0);
    client.set_read_timeout(settings_.timeout_s, 0);
    auto res = client.Post(settings_.path, headers, payload, "application/json");
    if (!res) {
      last_failure = fmt::format("connect: {}", httplib::to_string(res.error()));
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_failure = fmt::format("HTTP {}", res->status);
      continue;
    }
    if (res->status != 200) {
      throw BackendError(fmt::format("backend '{}': HTTP {}: {}", id_,
                                     res->status, res->body));
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw BackendError(
          fmt::format("backend '{}': bad response body: {}", id_, e.what()));
    }
    Completion c;
    try {
      c.text = reply.at("choices").at(0).at("message").at("content")
                   .get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(fmt::format(
          "backend '{}': response missing choices[0].message.content: {}",
          id_, e.what()));
    }
    if (reply.contains("usage")) {
      const auto& usage = reply.at("usage");
      c.tokens_in = usage.value("prompt_tokens", std::int64_t{0});
      c.tokens_out = usage.value("completion_tokens", std::int64_t{0});
    } else {
      c.tokens_in = prompt_tokens(request.messages);
      c.tokens_out =
          static_cast<std::int64_t>(sqltext::count_tokens_ws(c.text));
    }
    c.attempts = attempt;
    return c;
  }
  throw BackendError(fmt::format("backend '{}': {} after {} attempts", id_,
                                 last_failure, settings_.max_attempts));
}

void BackendRegistry::add(std::shared_ptr<Backend> backend) {
  std::lock_guard<std::mutex> lock(mu_);
  backends_[backend->id()] = std::move(backend);
}

bool BackendRegistry::has(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return backends_.count(id) > 0;
}

std::shared_ptr<Backend> BackendRegistry::get(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = backends_.find(id);
  if (it == backends_.end())
    throw BackendError(fmt::format("unknown backend '{}'", id));
  return it->second;
}

Completion BackendRegistry::complete(const CompletionRequest& request) {
  if (request.messages.empty())
    throw BackendError("completion request has no messages");
  return get(request.backend_id)->complete(request);
}

BackendRegistry BackendRegistry::from_config_file(
    const std::filesystem::path& path) {
  BackendRegistry registry;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(jsonio::read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw BackendError(
        fmt::format("backend config {}: {}", path.string(), e.what()));
  }
  if (!j.is_object() || !j.contains("backends") || !j.at("backends").is_object())
    throw BackendError(fmt::format(
        "backend config {}: expected an object with 'backends'", path.string()));
  for (const auto& [id, spec] : j.at("backends").items()) {
    std::string kind = spec.value("kind", "");
    if (kind == "Scripted") {
      std::filesystem::path replay = spec.value("replay", "");
      if (replay.is_relative()) replay = path.parent_path() / replay;
      registry.add(ScriptedBackend::from_replay_file(id, replay));
    } else if (kind == "Remote") {
      RemoteSettings settings;
      settings.base_url = spec.value("base_url", "");
      settings.path = spec.value("path", settings.path);
      settings.model = spec.value("model", "");
      settings.api_key_env = spec.value("api_key_env", "");
      settings.max_attempts = spec.value("max_attempts", settings.max_attempts);
      settings.backoff_ms = spec.value("backoff_ms", settings.backoff_ms);
      settings.max_inflight = spec.value("max_inflight", settings.max_inflight);
      settings.timeout_s = spec.value("timeout_s", settings.timeout_s);
      if (settings.base_url.empty())
        throw BackendError(fmt::format(
            "backend config {}: backend '{}' needs base_url", path.string(), id));
      registry.add(std::make_shared<RemoteBackend>(id, std::move(settings)));
    } else {
      throw BackendError(fmt::format(
          "backend config {}: backend '{}' has unknown kind '{}'",
          path.string(), id, kind));
    }
  }
  return registry;
}

ParseOutcome<std::string> parse_tagged(const std::string& text,
                                       const std::string& tag) {
  if (tag != "thought" && tag != "action")
    throw std::invalid_argument(fmt::format("parse_tagged: bad tag '{}'", tag));
  std::string open = fmt::format("<{}>", tag);
  std::string close = fmt::format("</{}>", tag);
  std::size_t start = text.find(open);
  if (start == std::string::npos)
    return ParseOutcome<std::string>::failure(
        fmt::format("missing {} tag", open), text);
  start += open.size();
  std::size_t end = text.find(close, start);
  if (end == std::string::npos)
    return ParseOutcome<std::string>::failure(
        fmt::format("unterminated {} tag", open), text);
  return ParseOutcome<std::string>::success(
      sqltext::trim(text.substr(start, end - start)));
}

ParseOutcome<std::string> extract_sql_fence(const std::string& text) {
  std::size_t pos = 0;
  while (true) {
    std::size_t fence = text.find("```", pos);
    if (fence == std::string::npos)
      return ParseOutcome<std::string>::failure("no ```sql fence found", text);
    std::size_t info_start = fence + 3;
    std::size_t newline = text.find('\n', info_start);
    if (newline == std::string::npos)
      return ParseOutcome<std::string>::failure("no ```sql fence found", text);
    std::string info =
        sqltext::to_lower(sqltext::trim(text.substr(info_start, newline - info_start)));
    if (info != "sql") {
      pos = info_start;
      continue;
    }
    std::size_t body_start = newline + 1;
    std::size_t body_end = text.find("```", body_start);
    if (body_end == std::string::npos)
      return ParseOutcome<std::string>::failure("unterminated ```sql fence",
                                                text);
    return ParseOutcome<std::string>::success(
        sqltext::trim(text.substr(body_start, body_end - body_start)));
  }
}

ParseOutcome<nlohmann::json> extract_json_object(const std::string& text) {
  // A ```json fence wins; otherwise scan for the first balanced object.
  std::size_t fence = text.find("```json");
  std::string candidate;
  if (fence != std::string::npos) {
    std::size_t body_start = text.find('\n', fence);
    if (body_start != std::string::npos) {
      std::size_t body_end = text.find("```", body_start + 1);
      if (body_end != std::string::npos)
        candidate = text.substr(body_start + 1, body_end - body_start - 1);
    }
  }
  if (candidate.empty()) {
    std::size_t start = text.find('{');
    if (start == std::string::npos)
      return ParseOutcome<nlohmann::json>::failure("no JSON object found",
                                                   text);
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped)
          escaped = false;
        else if (c == '\\')
          escaped = true;
        else if (c == '"')
          in_string = false;
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        --depth;
        if (depth == 0) {
          candidate = text.substr(start, i - start + 1);
          break;
        }
      }
    }
    if (candidate.empty())
      return ParseOutcome<nlohmann::json>::failure("unbalanced JSON object",
                                                   text);
  }
  try {
    return ParseOutcome<nlohmann::json>::success(
        nlohmann::json::parse(candidate));
  } catch (const nlohmann::json::parse_error& e) {
    return ParseOutcome<nlohmann::json>::failure(
        fmt::format("JSON parse failed: {}", e.what()), text);
  }
}

}  // namespace sqlfix
