#include "metarg/protocol.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>

#include <fmt/core.h>

#include "metarg/agents.hpp"
#include "metarg/error.hpp"
#include "metarg/trace.hpp"

namespace metarg {

using nlohmann::json;

json action_space(const RunConfig& config) {
  const auto& g = config.episode.game;
  return json{{"vocab_size", g.vocab_size},
              {"sentence_len", config.episode.sentence_len()},
              {"decisions", g.decision_count()},
              {"no_op", Decision::no_op().code()},
              {"no_target", Decision::no_target().code()},
              {"no_target_legal", g.no_target_legal()},
              {"rounds", g.rounds},
              {"stimulus_dim", config.episode.n_dim}};
}

std::string format_views(const std::vector<ScsStimulus>& views) {
  std::string out = "[";
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (v) out += ',';
    out += '[';
    for (std::size_t i = 0; i < views[v].coords.size(); ++i) {
      if (i) out += ',';
      out += fmt::format("{:.17g}", views[v].coords[i]);
    }
    out += ']';
  }
  return out + "]";
}

ProtocolSession::ProtocolSession(RunConfig base) : base_(std::move(base)), current_(base_) {}

std::vector<std::string> ProtocolSession::error(ErrorCode code, const std::string& message) {
  closed_ = true;
  return {json{{"type", "error"}, {"code", std::string(to_string(code))}, {"message", message}}.dump()};
}

std::vector<std::string> ProtocolSession::handle(std::string_view line) {
  if (closed_) return {};
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::parse_error& e) {
    return error(ErrorCode::protocol_violation, std::string("unparseable message: ") + e.what());
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string())
    return error(ErrorCode::protocol_violation, "message without a type");
  const auto type = msg["type"].get<std::string>();
  try {
    if (type == "hello") return on_hello(msg);
    if (state_ == State::await_hello) return error(ErrorCode::protocol_violation, "expected hello, got " + type);
    if (type == "reset") return on_reset(msg);
    if (type == "act") return on_act(msg);
    return error(ErrorCode::protocol_violation, "unknown message type '" + type + "'");
  } catch (const Error& e) {
    return error(e.code(), e.what());
  } catch (const json::exception& e) {
    return error(ErrorCode::protocol_violation, std::string("bad payload: ") + e.what());
  }
}

std::vector<std::string> ProtocolSession::on_hello(const json& msg) {
  if (state_ != State::await_hello) return error(ErrorCode::protocol_violation, "duplicate hello");
  const int version = msg.at("version").get<int>();
  if (version != kProtocolVersion)
    return error(ErrorCode::protocol_violation,
                 fmt::format("version mismatch: client {}, server {}", version, kProtocolVersion));
  state_ = State::await_reset;
  return {json{{"type", "hello"},
               {"version", kProtocolVersion},
               {"engine", kEngineVersion},
               {"action_space", action_space(base_)}}
              .dump()};
}

std::vector<std::string> ProtocolSession::on_reset(const json& msg) {
  RunConfig config = base_;
  if (msg.contains("config")) config = apply_json(msg["config"], config);
  if (msg.contains("seed")) config.seed = msg["seed"].get<std::uint64_t>();
  const std::uint64_t index = msg.contains("episode") ? msg["episode"].get<std::uint64_t>() : 0;
  config.validate();
  current_ = config;
  const EpisodeConfig cfg = config.episode_config(index);
  episode_.emplace(cfg, make_speaker(config.speaker, cfg), index);
  trace_.push_back(header_line(config, Task::referential));
  trace_.push_back(episode_start_line(*episode_));
  state_ = State::await_act;
  return {observation_line()};
}

std::string ProtocolSession::observation_line() const {
  const auto obs = episode_->observation();
  json j{{"type", "obs"},
         {"episode", episode_->id()},
         {"phase", std::string(to_string(episode_->phase()))},
         {"shot", episode_->shot()},
         {"game", episode_->game_index()},
         {"round", obs.round},
         {"turn", obs.turn == Turn::decision ? "decision" : "communication"},
         {"message", obs.message}};
  // "views" sorts after every other key, so it is appended by hand to keep
  // the 17-digit rendering.
  std::string line = j.dump();
  line.pop_back();
  return line + ",\"views\":" + format_views(obs.views) + "}";
}

std::vector<std::string> ProtocolSession::on_act(const json& msg) {
  if (state_ != State::await_act || !episode_) return error(ErrorCode::protocol_violation, "act without a pending obs");
  ListenerAction action;
  action.token = msg.at("token").get<int>();
  action.decision = Decision::from_code(msg.at("decision").get<int>());
  const Phase phase = episode_->phase();
  const Turn turn = episode_->observation().turn;
  StepResult result;
  try {
    result = episode_->step(action);
  } catch (const Error& e) {
    return error(e.code(), fmt::format("{} (phase {}, {} turn)", e.what(), to_string(phase),
                                       turn == Turn::decision ? "decision" : "communication"));
  }
  trace_.push_back(step_line(result.record));

  json reply{{"type", "result"},
             {"reward", result.reward},
             {"correct", result.record.correct ? json(*result.record.correct) : json(nullptr)},
             {"game_done", result.game_done},
             {"episode_done", result.episode_done}};
  if (result.outcome && result.outcome->revealed)
    reply["target_index"] = result.outcome->target_index ? json(*result.outcome->target_index) : json(nullptr);
  std::vector<std::string> out{reply.dump()};

  if (!result.episode_done) {
    out.push_back(observation_line());
    return out;
  }
  const auto summary = episode_->summary();
  trace_.push_back(episode_end_line(episode_->id(), summary));
  state_ = State::await_reset;
  out.push_back(json{{"type", "summary"},
                     {"episode", episode_->id()},
                     {"train_correct", summary.train_correct},
                     {"train_total", summary.train_total},
                     {"test_correct", summary.test_correct},
                     {"test_total", summary.test_total},
                     {"zsct", summary.zsct_accuracy()}}
                    .dump());
  return out;
}

// --- sockets -----------------------------------------------------------------

namespace {

std::pair<std::string, int> split_address(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::invalid_argument, "bind address must be host:port");
  int port = 0;
  try {
    port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::invalid_argument, "bad port in '" + bind + "'");
  }
  if (port < 0 || port > 65535) throw Error(ErrorCode::invalid_argument, "port out of range in '" + bind + "'");
  return {bind.substr(0, colon), port};
}

sockaddr_in resolve(const std::string& host, int port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  const std::string h = host.empty() || host == "localhost" ? "127.0.0.1" : host;
  if (::inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1)
    throw Error(ErrorCode::invalid_argument, "not an IPv4 address: '" + host + "'");
  return addr;
}

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

// Reads one '\n'-terminated line, buffering the rest.
std::optional<std::string> recv_line(int fd, std::string& buffer) {
  while (true) {
    const auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    char chunk[4096];
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return std::nullopt;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace

ProtocolServer::ProtocolServer(RunConfig base, std::string bind) : base_(std::move(base)), bind_(std::move(bind)) {}

ProtocolServer::~ProtocolServer() { stop(); }

int ProtocolServer::start() {
  const auto [host, port] = split_address(bind_);
  const sockaddr_in addr = resolve(host, port);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::io, std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(ErrorCode::io, "cannot bind " + bind_ + ": " + why);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  return port_;
}

void ProtocolServer::serve() {
  if (listen_fd_ < 0) start();
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    std::lock_guard lock(mutex_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { handle_connection(fd); });
  }
}

void ProtocolServer::handle_connection(int fd) {
  ProtocolSession session(base_);
  std::string buffer;
  while (!session.closed()) {
    const auto line = recv_line(fd, buffer);
    if (!line) break;
    if (line->empty()) continue;
    bool ok = true;
    for (const auto& reply : session.handle(*line)) ok = ok && send_all(fd, reply + "\n");
    if (!ok) break;
  }
  if (!base_.out.empty() && !session.trace().empty()) {
    std::lock_guard lock(trace_mutex_);
    std::ofstream out(base_.out, std::ios::app);
    for (const auto& l : session.trace()) out << l << '\n';
  }
  ::shutdown(fd, SHUT_RDWR);
  {
    std::lock_guard lock(mutex_);
    client_fds_.erase(std::remove(client_fds_.begin(), client_fds_.end(), fd), client_fds_.end());
    ::close(fd);
  }
  ++served_;
}

void ProtocolServer::stop() {
  if (stopping_.exchange(true)) return;
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mutex_);
    if (listen_fd_ >= 0) {
      ::shutdown(listen_fd_, SHUT_RDWR);
      ::close(listen_fd_);
      listen_fd_ = -1;
    }
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
}

LineClient::LineClient(const std::string& host, int port) {
  const sockaddr_in addr = resolve(host, port);
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0 || ::connect(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    const std::string why = std::strerror(errno);
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::io, fmt::format("cannot connect to {}:{}: {}", host, port, why));
  }
}

LineClient::~LineClient() {
  if (fd_ >= 0) ::close(fd_);
}

void LineClient::send(std::string_view line) {
  std::string data(line);
  data += '\n';
  if (!send_all(fd_, data)) throw Error(ErrorCode::io, "connection lost while sending");
}

std::optional<std::string> LineClient::read_line() { return recv_line(fd_, buffer_); }

}  // namespace metarg
