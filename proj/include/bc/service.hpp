#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bc/error.hpp"
#include "bc/pipeline.hpp"
#include "bc/protocol.hpp"

namespace bc {

/// Named session configurations a client may ask for in Hello.config_ref.
using ConfigRegistry = std::map<std::string, std::shared_ptr<const SessionConfig>>;

/// Kebab-case wire name of an error code, e.g. "unknown-task".
std::string wire_error_code(Errc code);

/// Protocol state machine for one connection, independent of the transport.
class SessionConnection {
 public:
  explicit SessionConnection(std::shared_ptr<const ConfigRegistry> configs);

  std::vector<wire::Outbound> handle(const wire::Inbound& msg);
  /// Set after Bye or a protocol violation; the transport closes then.
  bool terminated() const { return terminated_; }

 private:
  std::vector<wire::Outbound> on_hello(const wire::Hello& m);
  std::vector<wire::Outbound> on_start(const wire::StartTask& m);
  std::vector<wire::Outbound> on_audio(const wire::AudioChunk& m);
  std::vector<wire::Outbound> on_end();
  void forward(const std::vector<TimelineEntry>& entries, std::vector<wire::Outbound>& out);
  void countdown(std::vector<wire::Outbound>& out);

  std::shared_ptr<const ConfigRegistry> configs_;
  std::shared_ptr<const SessionConfig> cfg_;
  std::string session_id_;
  std::unique_ptr<Session> session_;
  std::unique_ptr<TaskPipeline> pipeline_;
  std::optional<TaskSpec> task_;
  std::optional<std::uint32_t> last_seq_;
  std::int64_t next_state_ms_ = 0;
  std::optional<std::string> playing_clip_;
  bool terminated_ = false;
};

/// BC_ENGINE_ADDR if set, otherwise 127.0.0.1:7700.
std::string default_listen_address();

/// Blocking TCP transport: one thread per connection, one session per
/// connection.
class TcpServer {
 public:
  /// addr is "host:port"; port 0 picks a free port.
  TcpServer(std::shared_ptr<const ConfigRegistry> configs, const std::string& addr);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  std::uint16_t port() const { return port_; }
  /// Accept loop on a background thread.
  void start();
  /// Accept loop on the calling thread; returns after stop().
  void run();
  void stop();

 private:
  void serve_connection(int fd);

  std::shared_ptr<const ConfigRegistry> configs_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex mu_;
  std::vector<std::thread> workers_;
  std::vector<int> client_fds_;
};

}  // namespace bc
