#pragma once

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <mutex>
#include <string>

#include "bc/error.hpp"
#include "bc/protocol.hpp"

namespace bc::test {

/// Blocking TCP client speaking the wire format; for tests only.
class WireClient {
 public:
  explicit WireClient(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_port = htons(port);
    a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&a), sizeof a) != 0) {
      throw Error(Errc::Io, std::string("connect: ") + std::strerror(errno));
    }
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~WireClient() { ::close(fd_); }
  WireClient(const WireClient&) = delete;
  WireClient& operator=(const WireClient&) = delete;

  void send(const wire::Inbound& m) { send_raw(wire::encode_frame(wire::encode(m))); }

  void send_raw(const std::vector<std::uint8_t>& bytes) {
    std::lock_guard lock(write_mu_);
    std::size_t off = 0;
    while (off < bytes.size()) {
      const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (n <= 0) throw Error(Errc::Io, "send failed");
      off += static_cast<std::size_t>(n);
    }
  }

  /// Next message, or nullopt once the server closed the connection.
  std::optional<wire::Outbound> recv() {
    for (;;) {
      if (auto f = reader_.next()) return wire::decode_outbound(*f);
      std::uint8_t buf[4096];
      const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
      if (n <= 0) return std::nullopt;
      reader_.feed({buf, static_cast<std::size_t>(n)});
    }
  }

 private:
  int fd_ = -1;
  wire::FrameReader reader_;
  std::mutex write_mu_;
};

}  // namespace bc::test
