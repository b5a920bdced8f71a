#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "metarg/config.hpp"
#include "metarg/episode.hpp"
#include "metarg/error.hpp"

namespace metarg {

inline constexpr int kProtocolVersion = 1;

// Newline-delimited JSON, one object per line, keys sorted.
//
//   client                                   server
//   {"type":"hello","version":1}             {"type":"hello","version":1,"action_space":{...}}
//   {"type":"reset","seed":S,                {"type":"obs",...}
//    "episode":i?,"config":{...}?}
//   {"type":"act","token":t,"decision":d}    {"type":"result",...} then {"type":"obs",...}
//                                            or {"type":"summary",...} after the last game
//
// Decisions use the wire codes of Decision (-1 no-op, -2 no target). View
// coordinates are printed with 17 significant digits. Any violation answers
// {"type":"error",...} and closes the session.
class ProtocolSession {
 public:
  explicit ProtocolSession(RunConfig base);

  std::vector<std::string> handle(std::string_view line);
  bool closed() const { return closed_; }
  // Trace lines (episode_start, step, episode_end) of every episode played.
  const std::vector<std::string>& trace() const { return trace_; }
  const std::optional<MetaEpisode>& episode() const { return episode_; }

 private:
  enum class State { await_hello, await_reset, await_act };

  std::vector<std::string> on_hello(const nlohmann::json& msg);
  std::vector<std::string> on_reset(const nlohmann::json& msg);
  std::vector<std::string> on_act(const nlohmann::json& msg);
  std::vector<std::string> error(ErrorCode code, const std::string& message);
  std::string observation_line() const;

  RunConfig base_;
  RunConfig current_;
  State state_ = State::await_hello;
  bool closed_ = false;
  std::optional<MetaEpisode> episode_;
  std::vector<std::string> trace_;
};

nlohmann::json action_space(const RunConfig& config);
std::string format_views(const std::vector<ScsStimulus>& views);

// TCP server, one thread and one session per connection.
class ProtocolServer {
 public:
  // bind is "host:port"; port 0 picks a free port.
  ProtocolServer(RunConfig base, std::string bind);
  ~ProtocolServer();
  ProtocolServer(const ProtocolServer&) = delete;
  ProtocolServer& operator=(const ProtocolServer&) = delete;

  // Binds and listens; returns the bound port.
  int start();
  // Accepts connections until stop().
  void serve();
  void stop();
  int port() const { return port_; }
  std::size_t sessions_served() const { return served_.load(); }

 private:
  void handle_connection(int fd);

  RunConfig base_;
  std::string bind_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::size_t> served_{0};
  std::mutex mutex_;
  std::vector<std::thread> workers_;
  std::vector<int> client_fds_;
  std::mutex trace_mutex_;
};

// Blocking line client, for tests and tools.
class LineClient {
 public:
  LineClient(const std::string& host, int port);
  ~LineClient();
  LineClient(const LineClient&) = delete;
  LineClient& operator=(const LineClient&) = delete;

  void send(std::string_view line);
  // Empty when the peer closed the connection.
  std::optional<std::string> read_line();

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace metarg
