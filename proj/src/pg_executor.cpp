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

#include "sqlfix/pg_executor.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <set>
#include <vector>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "sqlfix/sqltext.hpp"

namespace sqlfix {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::int32_t kProtocolV3 = 196608;    // 3.0
constexpr std::int32_t kCancelCode = 80877102;  // cancel request magic

std::string md5_hex(const std::string& in) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(in.data(), in.size(), digest, &len, EVP_md5(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

class ByteWriter {
 public:
  void u8(char c) { buf_ += c; }
  void i16(std::int16_t v) {
    std::uint16_t n = htons(static_cast<std::uint16_t>(v));
    buf_.append(reinterpret_cast<const char*>(&n), 2);
  }
  void i32(std::int32_t v) {
    std::uint32_t n = htonl(static_cast<std::uint32_t>(v));
    buf_.append(reinterpret_cast<const char*>(&n), 4);
  }
  void cstr(const std::string& s) {
    buf_ += s;
    buf_ += '\0';
  }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

// type 0 means the untyped startup/cancel frame.
std::string frame(char type, const std::string& body) {
  std::string out;
  if (type != 0) out += type;
  std::uint32_t len = htonl(static_cast<std::uint32_t>(body.size() + 4));
  out.append(reinterpret_cast<const char*>(&len), 4);
  out += body;
  return out;
}

class BodyReader {
 public:
  explicit BodyReader(const std::string& body) : body_(body) {}

  char u8() { return body_.at(pos_++); }
  std::int16_t i16() {
    std::uint16_t n;
    std::memcpy(&n, body_.data() + pos_, 2);
    pos_ += 2;
    return static_cast<std::int16_t>(ntohs(n));
  }
  std::int32_t i32() {
    std::uint32_t n;
    std::memcpy(&n, body_.data() + pos_, 4);
    pos_ += 4;
    return static_cast<std::int32_t>(ntohl(n));
  }
  std::string cstr() {
    std::size_t end = body_.find('\0', pos_);
    if (end == std::string::npos) end = body_.size();
    std::string s = body_.substr(pos_, end - pos_);
    pos_ = end + 1;
    return s;
  }
  std::string bytes(std::size_t n) {
    std::string s = body_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ >= body_.size(); }

 private:
  const std::string& body_;
  std::size_t pos_ = 0;
};

int connect_with_timeout(const std::string& host, int port, int timeout_ms) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  std::string service = fmt::format("{}", port);
  int rc = getaddrinfo(host.c_str(), service.c_str(), &hints, &res);
  if (rc != 0) {
    throw SandboxError(fmt::format("cannot resolve {}: {}", host,
                                   gai_strerror(rc)));
  }
  int fd = -1;
  std::string last_error = "no addresses";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_NONBLOCK,
                  ai->ai_protocol);
    if (fd < 0) {
      last_error = std::strerror(errno);
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    if (errno == EINPROGRESS) {
      pollfd pfd{fd, POLLOUT, 0};
      int pr = ::poll(&pfd, 1, timeout_ms);
      int err = 0;
      socklen_t len = sizeof(err);
      if (pr > 0 &&
          ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len) == 0 &&
          err == 0) {
        break;
      }
      last_error = pr <= 0 ? "connect timeout" : std::strerror(err);
    } else {
      last_error = std::strerror(errno);
    }
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(res);
  if (fd < 0) {
    throw SandboxError(
        fmt::format("cannot connect to {}:{}: {}", host, port, last_error));
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

struct BackendMessage {
  char type = 0;
  std::string body;
};

// One backend connection running the simple-query protocol.
class PgConnection {
 public:
  PgConnection(const PgSettings& settings, const std::string& dbname)
      : settings_(settings), dbname_(dbname) {
    fd_ = connect_with_timeout(settings.host, settings.port,
                               settings.connect_timeout_ms);
    authenticate();
  }

  ~PgConnection() { terminate(); }

  PgConnection(const PgConnection&) = delete;
  PgConnection& operator=(const PgConnection&) = delete;

  bool alive() const { return fd_ >= 0; }

  void terminate() {
    if (fd_ < 0) return;
    std::string msg = frame('X', "");
    (void)::send(fd_, msg.data(), msg.size(), MSG_NOSIGNAL);
    ::close(fd_);
    fd_ = -1;
  }

  struct Result {
    bool had_rowdesc = false;
    std::vector<std::string> columns;
    std::vector<std::int32_t> type_oids;
    // Raw text values, one optional per column; nullopt is SQL NULL.
    std::vector<std::vector<std::optional<std::string>>> rows;
    bool truncated = false;
    std::string command_tag;
    std::optional<std::string> error;
    std::string sqlstate;
    bool canceled = false;  // a deadline cancel was issued for this query
  };

  // Runs one simple-query round trip. On deadline expiry a cancel request
  // goes out on a side connection; if the backend stays silent past the
  // grace period the connection is declared dead.
  Result query(const std::string& sql, Clock::time_point deadline,
               std::size_t row_cap) {
    Result out;
    if (fd_ < 0) {
      out.error = "connection lost";
      return out;
    }
    ByteWriter w;
    w.cstr(sql);
    if (!send_all(frame('Q', w.data()), deadline)) {
      out.error = "connection lost while sending query";
      return out;
    }

    IoState io{deadline, Clock::time_point{}, false};
    Result current;  // accumulators for the statement in flight
    bool saw_ready = false;
    while (!saw_ready) {
      BackendMessage msg;
      if (!read_message(&msg, &io, &out)) {
        out.error = out.canceled
                        ? "statement canceled on deadline; backend "
                          "unresponsive, connection dropped"
                        : "connection lost while reading reply";
        return out;
      }
      BodyReader body(msg.body);
      switch (msg.type) {
        case 'T': {  // RowDescription: a fresh result set begins
          current = Result{};
          current.had_rowdesc = true;
          std::int16_t nfields = body.i16();
          for (std::int16_t i = 0; i < nfields; ++i) {
            current.columns.push_back(body.cstr());
            body.i32();  // relation oid
            body.i16();  // attribute number
            current.type_oids.push_back(body.i32());
            body.i16();  // type size
            body.i32();  // type modifier
            body.i16();  // format
          }
          break;
        }
        case 'D': {
          std::int16_t nfields = body.i16();
          std::vector<std::optional<std::string>> row;
          row.reserve(nfields);
          for (std::int16_t i = 0; i < nfields; ++i) {
            std::int32_t len = body.i32();
            if (len < 0) {
              row.push_back(std::nullopt);
            } else {
              row.push_back(body.bytes(static_cast<std::size_t>(len)));
            }
          }
          if (current.rows.size() < row_cap) {
            current.rows.push_back(std::move(row));
          } else {
            current.truncated = true;
          }
          break;
        }
        case 'C': {  // CommandComplete: the observation tracks the last one
          current.command_tag = body.cstr();
          std::string error_keep = out.error.value_or("");
          bool had_error = out.error.has_value();
          std::string state_keep = out.sqlstate;
          bool cancel_keep = out.canceled;
          out = std::move(current);
          if (had_error) {
            out.error = error_keep;
            out.sqlstate = state_keep;
          }
          out.canceled = cancel_keep;
          current = Result{};
          break;
        }
        case 'I':  // EmptyQueryResponse
          current = Result{};
          break;
        case 'E': {
          std::string message = "unknown error";
          std::string state;
          while (!body.done()) {
            char code = body.u8();
            if (code == 0) break;
            std::string value = body.cstr();
            if (code == 'M') message = value;
            if (code == 'C') state = value;
          }
          out.error = message;
          out.sqlstate = state;
          break;
        }
        case 'Z':
          saw_ready = true;
          break;
        case 'N':  // NoticeResponse
        case 'S':  // ParameterStatus
        case 'K':
        case 'A':  // NotificationResponse
          break;
        default:
          // COPY and friends are outside the supported subset; the stream
          // is no longer parseable, so drop the connection.
          hard_close();
          out.error = fmt::format("unsupported backend message '{}'",
                                  msg.type);
          return out;
      }
    }
    return out;
  }

 private:
  struct IoState {
    Clock::time_point deadline;
    Clock::time_point grace_deadline;
    bool cancel_sent = false;
  };

  void authenticate() {
    ByteWriter startup;
    startup.i32(kProtocolV3);
    startup.cstr("user");
    startup.cstr(settings_.user);
    startup.cstr("database");
    startup.cstr(dbname_);
    startup.u8(0);
    Clock::time_point deadline =
        Clock::now() + std::chrono::milliseconds(settings_.connect_timeout_ms);
    if (!send_all(frame(0, startup.data()), deadline)) {
      hard_close();
      throw SandboxError("connection lost during startup");
    }
    IoState io{deadline, deadline, true};  // no cancel during auth
    for (;;) {
      BackendMessage msg;
      if (!read_message(&msg, &io, nullptr)) {
        hard_close();
        throw SandboxError("no response from server during startup");
      }
      BodyReader body(msg.body);
      if (msg.type == 'R') {
        std::int32_t code = body.i32();
        if (code == 0) continue;  // AuthenticationOk
        if (code == 3) {          // cleartext password
          ByteWriter w;
          w.cstr(settings_.password);
          if (!send_all(frame('p', w.data()), deadline)) {
            hard_close();
            throw SandboxError("connection lost during authentication");
          }
          continue;
        }
        if (code == 5) {  // md5
          std::string salt = body.bytes(4);
          ByteWriter w;
          w.cstr(pg_md5_password(settings_.user, settings_.password, salt));
          if (!send_all(frame('p', w.data()), deadline)) {
            hard_close();
            throw SandboxError("connection lost during authentication");
          }
          continue;
        }
        hard_close();
        throw SandboxError(fmt::format(
            "unsupported authentication request (code {})", code));
      } else if (msg.type == 'K') {
        backend_pid_ = body.i32();
        backend_secret_ = body.i32();
      } else if (msg.type == 'E') {
        std::string message = "startup failed";
        while (!body.done()) {
          char code = body.u8();
          if (code == 0) break;
          std::string value = body.cstr();
          if (code == 'M') message = value;
        }
        hard_close();
        throw SandboxError(fmt::format("server rejected connection: {}",
                                       message));
      } else if (msg.type == 'Z') {
        return;
      }
      // ParameterStatus and notices fall through silently.
    }
  }

  void hard_close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  bool send_all(const std::string& data, Clock::time_point deadline) {
    std::size_t off = 0;
    while (off < data.size()) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                      deadline - Clock::now())
                      .count();
      if (left <= 0) return false;
      pollfd pfd{fd_, POLLOUT, 0};
      int pr = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left, 100)));
      if (pr < 0 && errno != EINTR) return false;
      if (pr <= 0) continue;
      ssize_t n = ::send(fd_, data.data() + off, data.size() - off,
                         MSG_NOSIGNAL);
      if (n > 0) {
        off += static_cast<std::size_t>(n);
      } else if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK &&
                 errno != EINTR) {
        return false;
      }
    }
    return true;
  }

  // result may be null during auth (no cancel path).
  bool recv_exact(char* out, std::size_t n, IoState* io, Result* result) {
    std::size_t off = 0;
    while (off < n) {
      Clock::time_point now = Clock::now();
      Clock::time_point limit =
          io->cancel_sent ? io->grace_deadline : io->deadline;
      if (now >= limit) {
        if (!io->cancel_sent && result != nullptr) {
          send_cancel();
          io->cancel_sent = true;
          result->canceled = true;
          io->grace_deadline =
              now + std::chrono::milliseconds(settings_.cancel_grace_ms);
          continue;
        }
        hard_close();
        return false;
      }
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                      limit - now)
                      .count();
      pollfd pfd{fd_, POLLIN, 0};
      int pr = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left, 100)));
      if (pr < 0 && errno != EINTR) {
        hard_close();
        return false;
      }
      if (pr <= 0) continue;
      ssize_t got = ::recv(fd_, out + off, n - off, 0);
      if (got > 0) {
        off += static_cast<std::size_t>(got);
      } else if (got == 0) {
        hard_close();
        return false;
      } else if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
        hard_close();
        return false;
      }
    }
    return true;
  }

  bool read_message(BackendMessage* msg, IoState* io, Result* result) {
    char header[5];
    if (!recv_exact(header, 5, io, result)) return false;
    msg->type = header[0];
    std::uint32_t raw_len;
    std::memcpy(&raw_len, header + 1, 4);
    std::uint32_t len = ntohl(raw_len);
    if (len < 4 || len > (64u << 20)) {  // frame sanity: 64MB ceiling
      hard_close();
      return false;
    }
    msg->body.resize(len - 4);
    if (len > 4 && !recv_exact(msg->body.data(), len - 4, io, result)) {
      return false;
    }
    return true;
  }

  // Cancellation travels on a fresh connection carrying the key data.
  void send_cancel() {
    if (backend_pid_ == 0 && backend_secret_ == 0) return;
    try {
      int cfd = connect_with_timeout(settings_.host, settings_.port, 1000);
      ByteWriter w;
      w.i32(kCancelCode);
      w.i32(backend_pid_);
      w.i32(backend_secret_);
      std::string msg = frame(0, w.data());
      (void)::send(cfd, msg.data(), msg.size(), MSG_NOSIGNAL);
      ::close(cfd);
    } catch (const SandboxError&) {
      // Cancel is best effort; the grace deadline still applies.
    }
  }

  PgSettings settings_;
  std::string dbname_;
  int fd_ = -1;
  std::int32_t backend_pid_ = 0;
  std::int32_t backend_secret_ = 0;
};

Value decode_value(const std::optional<std::string>& text, std::int32_t oid) {
  if (!text.has_value()) return Value{};
  const std::string& s = *text;
  switch (oid) {
    case 16:  // bool
      return Value{static_cast<std::int64_t>(s == "t" ? 1 : 0)};
    case 20:  // int8
    case 21:  // int2
    case 23:  // int4
    case 26:  // oid
      try {
        return Value{static_cast<std::int64_t>(std::stoll(s))};
      } catch (...) {
        return Value{s};
      }
    case 700:   // float4
    case 701:   // float8
    case 1700:  // numeric
      try {
        return Value{std::stod(s)};
      } catch (...) {
        return Value{s};
      }
    default:
      return Value{s};
  }
}

std::optional<std::int64_t> affected_from_tag(const std::string& tag) {
  static const std::set<std::string> dml = {"insert", "update", "delete",
                                            "merge", "move", "fetch", "copy"};
  std::vector<std::string> parts = sqltext::tokenize_ws(tag);
  if (parts.empty() || dml.count(sqltext::to_lower(parts.front())) == 0) {
    return std::nullopt;
  }
  try {
    return static_cast<std::int64_t>(std::stoll(parts.back()));
  } catch (...) {
    return std::nullopt;
  }
}

std::string escape_literal(const std::string& s) {
  std::string out;
  for (char ch : s) {
    out += ch;
    if (ch == '\'') out += '\'';
  }
  return out;
}

const char* kSchemaSql =
    "SELECT 'CREATE TABLE ' || table_name || ' (' || "
    "string_agg(column_name || ' ' || data_type, ', ' "
    "ORDER BY ordinal_position) || ');' "
    "FROM information_schema.columns WHERE table_schema = 'public'";

const std::set<std::string>& txn_keywords() {
  static const std::set<std::string> kw = {"begin",     "commit",  "rollback",
                                           "savepoint", "release", "end",
                                           "start",     "abort"};
  return kw;
}

class PgExecutor : public Executor {
 public:
  PgExecutor(const PgSettings& settings, const TaskInstance& task,
             IsolationMode mode) {
    if (mode != IsolationMode::kTransactionRollback) {
      throw SandboxError(
          "PostgresLike supports only TransactionRollback isolation");
    }
    std::string dbname =
        settings.dbname.empty() ? task.db_ref : settings.dbname;
    conn_ = std::make_unique<PgConnection>(settings, dbname);
    internal("BEGIN");
  }

  ExecObservation execute(const std::string& sql,
                          const ExecLimits& limits) override {
    auto started = Clock::now();
    ExecObservation obs;
    auto finish = [&](ExecObservation& o) -> ExecObservation {
      o.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         Clock::now() - started)
                         .count();
      return o;
    };
    if (poisoned_ || !conn_->alive()) {
      poisoned_ = true;
      obs.status = ExecStatus::kError;
      obs.error_text = "connection lost; session poisoned";
      return finish(obs);
    }
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

    // One savepoint per call: an error aborts only this statement, not
    // the episode transaction.
    if (!quiet("SAVEPOINT sp_stmt")) {
      obs.status = ExecStatus::kError;
      obs.error_text = "connection lost; session poisoned";
      return finish(obs);
    }

    Clock::time_point deadline =
        started + std::chrono::milliseconds(limits.timeout_ms);
    PgConnection::Result r = conn_->query(
        sql, deadline, static_cast<std::size_t>(limits.row_cap));
    if (!conn_->alive()) poisoned_ = true;

    if (r.error.has_value()) {
      bool timeout = r.canceled || r.sqlstate == "57014";
      obs.status = timeout ? ExecStatus::kTimeout : ExecStatus::kError;
      obs.error_text = *r.error;
      if (conn_->alive()) quiet("ROLLBACK TO SAVEPOINT sp_stmt");
      return finish(obs);
    }
    quiet("RELEASE SAVEPOINT sp_stmt");

    if (r.had_rowdesc) {
      obs.status = ExecStatus::kRows;
      obs.columns = r.columns;
      obs.truncated = r.truncated;
      for (const auto& raw : r.rows) {
        Row row;
        row.reserve(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
          std::int32_t oid =
              i < r.type_oids.size() ? r.type_oids[i] : 25;  // text
          row.push_back(decode_value(raw[i], oid));
        }
        obs.rows.push_back(std::move(row));
      }
    } else {
      obs.status = ExecStatus::kAffected;
      obs.affected_count = affected_from_tag(r.command_tag).value_or(0);
    }
    return finish(obs);
  }

  void snapshot() override { internal("SAVEPOINT sp_base"); }

  void reset() override {
    if (poisoned_ || !conn_->alive()) {
      throw SandboxError("connection lost; reset is not available");
    }
    // ROLLBACK TO leaves sp_base standing, so reset works repeatedly and
    // recovers an aborted transaction.
    internal("ROLLBACK TO SAVEPOINT sp_base");
  }

  void end_episode() override {
    if (conn_->alive()) quiet("ROLLBACK");
  }

  void close() override { conn_->terminate(); }

  bool poisoned() const override { return poisoned_ || !conn_->alive(); }

  std::string schema_text() override {
    std::string sql = fmt::format(
        "{} GROUP BY table_name ORDER BY table_name", kSchemaSql);
    PgConnection::Result r = run_catalog(sql);
    std::string out;
    for (const auto& row : r.rows) {
      if (!row.empty() && row[0].has_value()) {
        if (!out.empty()) out += "\n";
        out += *row[0];
      }
    }
    return out;
  }

  std::string table_ddl(const std::string& table) override {
    std::string sql = fmt::format(
        "{} AND table_name = '{}' GROUP BY table_name", kSchemaSql,
        escape_literal(table));
    PgConnection::Result r = run_catalog(sql);
    if (!r.rows.empty() && !r.rows[0].empty() && r.rows[0][0].has_value()) {
      return *r.rows[0][0];
    }
    return "";
  }

 private:
  PgConnection::Result run_catalog(const std::string& sql) {
    Clock::time_point deadline = Clock::now() + std::chrono::seconds(30);
    PgConnection::Result r = conn_->query(sql, deadline, 10000);
    if (r.error.has_value()) {
      throw SandboxError(fmt::format("catalog query failed: {}", *r.error));
    }
    return r;
  }

  // Bookkeeping statement that must succeed.
  void internal(const std::string& sql) {
    Clock::time_point deadline = Clock::now() + std::chrono::seconds(120);
    PgConnection::Result r = conn_->query(sql, deadline, 1);
    if (r.error.has_value()) {
      poisoned_ = true;
      throw SandboxError(
          fmt::format("sandbox statement '{}' failed: {}", sql, *r.error));
    }
  }

  // Bookkeeping statement where failure only poisons.
  bool quiet(const std::string& sql) {
    if (!conn_->alive()) {
      poisoned_ = true;
      return false;
    }
    Clock::time_point deadline = Clock::now() + std::chrono::seconds(120);
    PgConnection::Result r = conn_->query(sql, deadline, 1);
    if (r.error.has_value()) {
      poisoned_ = true;
      return false;
    }
    return true;
  }

  std::unique_ptr<PgConnection> conn_;
  bool poisoned_ = false;
};

}  // namespace

PgSettings pg_settings_from_env() { return pg_settings_from_env(PgSettings{}); }

PgSettings pg_settings_from_env(PgSettings base) {
  PgSettings s = std::move(base);
  if (const char* v = std::getenv("SQLFIX_PG_HOST")) s.host = v;
  if (const char* v = std::getenv("SQLFIX_PG_PORT")) s.port = std::atoi(v);
  if (const char* v = std::getenv("SQLFIX_PG_USER")) s.user = v;
  if (const char* v = std::getenv("SQLFIX_PG_PASSWORD")) s.password = v;
  if (const char* v = std::getenv("SQLFIX_PG_DB")) s.dbname = v;
  return s;
}

std::string pg_md5_password(const std::string& user,
                            const std::string& password,
                            const std::string& salt) {
  return "md5" + md5_hex(md5_hex(password + user) + salt);
}

PgExecutorFactory::PgExecutorFactory(PgSettings settings)
    : settings_(std::move(settings)) {}

std::unique_ptr<Executor> PgExecutorFactory::open(const TaskInstance& task,
                                                  IsolationMode mode) {
  return std::make_unique<PgExecutor>(settings_, task, mode);
}

IsolationMode PgExecutorFactory::default_isolation() const {
  return IsolationMode::kTransactionRollback;
}

}  // namespace sqlfix
