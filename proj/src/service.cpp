#include "bc/service.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <iostream>

#include "bc/error.hpp"

namespace bc {

std::string wire_error_code(Errc code) {
  const std::string_view name = to_string(code);
  std::string out;
  for (char c : name) {
    if (std::isupper(static_cast<unsigned char>(c))) {
      if (!out.empty()) out += '-';
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      out += c;
    }
  }
  return out;
}

SessionConnection::SessionConnection(std::shared_ptr<const ConfigRegistry> configs) : configs_(std::move(configs)) {}

std::vector<wire::Outbound> SessionConnection::handle(const wire::Inbound& msg) {
  if (terminated_) return {wire::ErrorMsg{"protocol-error", "session terminated"}};
  try {
    if (std::holds_alternative<wire::Hello>(msg)) return on_hello(std::get<wire::Hello>(msg));
    if (!session_) throw Error(Errc::ProtocolError, "expected hello first");
    if (auto* m = std::get_if<wire::StartTask>(&msg)) return on_start(*m);
    if (auto* m = std::get_if<wire::AudioChunk>(&msg)) return on_audio(*m);
    if (std::holds_alternative<wire::EndTask>(msg)) return on_end();
    if (std::holds_alternative<wire::PlaybackDone>(msg)) {
      playing_clip_.reset();
      session_->set_external_playback(false);
      return {};
    }
    // Bye
    std::vector<wire::Outbound> out;
    if (pipeline_) out = on_end();
    terminated_ = true;
    return out;
  } catch (const Error& e) {
    if (e.code() == Errc::ProtocolError) terminated_ = true;
    return {wire::ErrorMsg{wire_error_code(e.code()), e.what()}};
  }
}

std::vector<wire::Outbound> SessionConnection::on_hello(const wire::Hello& m) {
  if (session_) throw Error(Errc::ProtocolError, "duplicate hello");
  auto it = configs_->find(m.config_ref);
  if (it == configs_->end()) throw Error(Errc::ProtocolError, "unknown config_ref '" + m.config_ref + "'");
  cfg_ = it->second;
  session_ = std::make_unique<Session>(make_session(*cfg_, cfg_->seed));
  session_id_ = m.session_id;
  return {wire::Ready{m.session_id}};
}

std::vector<wire::Outbound> SessionConnection::on_start(const wire::StartTask& m) {
  if (pipeline_) throw Error(Errc::ProtocolError, "start_task while a task is active");
  const TaskSpec& spec = cfg_->task(m.task_id);
  pipeline_ = std::make_unique<TaskPipeline>(*session_, cfg_->sid, spec);
  task_ = spec;
  last_seq_.reset();
  next_state_ms_ = 1000;
  return {wire::TaskState{spec.task_id, spec.duration_ms, "in_progress"}};
}

std::vector<wire::Outbound> SessionConnection::on_audio(const wire::AudioChunk& m) {
  if (!pipeline_) return {wire::ErrorMsg{"no-active-task", "audio chunk outside a task"}};
  if (last_seq_ && m.seq <= *last_seq_) {
    throw Error(Errc::ProtocolError,
                "seq " + std::to_string(m.seq) + " does not follow " + std::to_string(*last_seq_));
  }
  last_seq_ = m.seq;
  std::vector<float> samples(m.samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = pcm16_to_float(m.samples[i]);
  std::vector<wire::Outbound> out;
  forward(pipeline_->push(samples), out);
  countdown(out);
  return out;
}

std::vector<wire::Outbound> SessionConnection::on_end() {
  if (!pipeline_) throw Error(Errc::ProtocolError, "end_task without an active task");
  std::vector<wire::Outbound> out;
  forward(pipeline_->finish(), out);
  out.push_back(wire::TaskState{task_->task_id, 0, "done"});
  pipeline_.reset();
  task_.reset();
  return out;
}

void SessionConnection::forward(const std::vector<TimelineEntry>& entries, std::vector<wire::Outbound>& out) {
  for (const auto& e : entries) {
    if (e.type == TimelineEntry::Type::Event) {
      out.push_back(wire::Event{e.event});
    } else if (e.type == TimelineEntry::Type::Backchannel) {
      out.push_back(wire::Backchannel{to_string(e.decision.category), e.decision.clip.clip_id, e.decision.t_ms});
      // hold further decisions until the client reports the clip finished
      playing_clip_ = e.decision.clip.clip_id;
      session_->set_external_playback(true);
    }
  }
}

void SessionConnection::countdown(std::vector<wire::Outbound>& out) {
  if (task_->task_type != TaskType::II) return;
  const std::int64_t now = pipeline_->audio_ms();
  while (next_state_ms_ <= now && next_state_ms_ <= task_->duration_ms) {
    out.push_back(wire::TaskState{task_->task_id, task_->duration_ms - next_state_ms_, "in_progress"});
    next_state_ms_ += 1000;
  }
}

// ---------------------------------------------------------------------------

std::string default_listen_address() {
  if (const char* env = std::getenv("BC_ENGINE_ADDR"); env && *env) return env;
  return "127.0.0.1:7700";
}

namespace {

bool write_all(int fd, const std::vector<std::uint8_t>& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

TcpServer::TcpServer(std::shared_ptr<const ConfigRegistry> configs, const std::string& addr)
    : configs_(std::move(configs)) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::InvalidArgument, "listen address must be host:port");
  const std::string host = addr.substr(0, colon);
  const std::string port = addr.substr(colon + 1);

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw Error(Errc::InvalidArgument, "cannot resolve " + addr + ": " + gai_strerror(rc));
  }
  listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (listen_fd_ < 0) {
    ::freeaddrinfo(res);
    throw Error(Errc::Io, std::string("socket: ") + std::strerror(errno));
  }
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, res->ai_addr, res->ai_addrlen) != 0 || ::listen(listen_fd_, 16) != 0) {
    const std::string why = std::strerror(errno);
    ::freeaddrinfo(res);
    ::close(listen_fd_);
    throw Error(Errc::Io, "cannot listen on " + addr + ": " + why);
  }
  ::freeaddrinfo(res);
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start() {
  accept_thread_ = std::thread([this] { run(); });
}

void TcpServer::run() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, 100);
    if (rc <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(mu_);
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void TcpServer::stop() {
  if (stopping_.exchange(true)) return;
  if (accept_thread_.joinable()) accept_thread_.join();
  {
    std::lock_guard lock(mu_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& t : workers_) {
    if (t.joinable()) t.join();
  }
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
}

void TcpServer::serve_connection(int fd) {
  SessionConnection conn(configs_);
  wire::FrameReader reader;
  std::uint8_t buf[8192];
  try {
    while (!conn.terminated()) {
      const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      reader.feed({buf, static_cast<std::size_t>(n)});
      while (auto frame = reader.next()) {
        std::vector<wire::Outbound> out;
        try {
          out = conn.handle(wire::decode_inbound(*frame));
        } catch (const Error& e) {
          out = conn.handle(wire::Bye{});
          out.push_back(wire::ErrorMsg{wire_error_code(e.code()), e.what()});
        }
        std::vector<std::uint8_t> bytes;
        for (const auto& m : out) {
          auto enc = wire::encode_frame(wire::encode(m));
          bytes.insert(bytes.end(), enc.begin(), enc.end());
        }
        if (!write_all(fd, bytes)) throw Error(Errc::Io, "client disconnected");
        if (conn.terminated()) break;
      }
    }
  } catch (const Error& e) {
    if (e.code() == Errc::ProtocolError) {
      write_all(fd, wire::encode_frame(wire::encode(wire::Outbound{wire::ErrorMsg{"protocol-error", e.what()}})));
    }
  }
  ::shutdown(fd, SHUT_RDWR);
  std::lock_guard lock(mu_);
  std::erase(client_fds_, fd);
  ::close(fd);
}

}  // namespace bc
