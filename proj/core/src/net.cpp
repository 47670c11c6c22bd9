#include "selfheal/net.hpp"

#include <arpa/inet.h>
#include <errno.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

namespace selfheal::net {

namespace {

using Clock = std::chrono::steady_clock;

sockaddr_in resolve(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) == 1) return addr;

  addrinfo hints{};
  hints.ai_family = AF_INET;
  addrinfo* res = nullptr;
  if (getaddrinfo(ep.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw NetError(NetError::Kind::ConnectFailed, "cannot resolve " + ep.host);
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return addr;
}

// Waits for `events` on fd; false on timeout.
bool wait_fd(int fd, short events, Timeout timeout) {
  pollfd p{fd, events, 0};
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() < 0) left = std::chrono::milliseconds(0);
    int rc = ::poll(&p, 1, static_cast<int>(left.count()));
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) throw NetError(NetError::Kind::Io, std::string("poll: ") + std::strerror(errno));
  }
}

std::uint16_t bound_port(int fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  return ntohs(addr.sin_port);
}

}  // namespace

Endpoint parse_endpoint(std::string_view text, std::uint16_t default_port) {
  Endpoint ep;
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos) {
    if (text.empty() || default_port == 0) throw std::invalid_argument("endpoint needs host:port");
    ep.host = std::string(text);
    ep.port = default_port;
    return ep;
  }
  ep.host = std::string(text.substr(0, colon));
  auto port_text = text.substr(colon + 1);
  if (ep.host.empty() || port_text.empty()) throw std::invalid_argument("bad endpoint: " + std::string(text));
  unsigned long port = 0;
  for (char c : port_text) {
    if (c < '0' || c > '9') throw std::invalid_argument("bad endpoint port: " + std::string(text));
    port = port * 10 + static_cast<unsigned long>(c - '0');
    if (port > 65535) throw std::invalid_argument("endpoint port out of range");
  }
  if (port == 0) throw std::invalid_argument("endpoint port must be non-zero");
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.release();
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

TcpStream TcpStream::connect(const Endpoint& ep, Timeout timeout) {
  const auto addr = resolve(ep);
  Socket sock(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0));
  if (!sock.valid()) throw NetError(NetError::Kind::Io, "socket() failed");

  int rc = ::connect(sock.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr);
  if (rc != 0 && errno != EINPROGRESS) {
    throw NetError(NetError::Kind::ConnectFailed, "connect " + ep.str() + ": " + std::strerror(errno));
  }
  if (rc != 0) {
    if (!wait_fd(sock.fd(), POLLOUT, timeout)) {
      throw NetError(NetError::Kind::Timeout, "connect " + ep.str() + ": timed out");
    }
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(sock.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
      throw NetError(NetError::Kind::ConnectFailed, "connect " + ep.str() + ": " + std::strerror(err));
    }
  }
  int one = 1;
  ::setsockopt(sock.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return TcpStream(std::move(sock));
}

void TcpStream::send_all(std::span<const std::uint8_t> data, Timeout timeout) {
  const auto deadline = Clock::now() + timeout;
  std::size_t sent = 0;
  while (sent < data.size()) {
    auto left = std::chrono::duration_cast<Timeout>(deadline - Clock::now());
    if (left.count() <= 0 || !wait_fd(sock_.fd(), POLLOUT, left)) {
      throw NetError(NetError::Kind::Timeout, "send timed out");
    }
    ssize_t n = ::send(sock_.fd(), data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      if (errno == EPIPE || errno == ECONNRESET) throw NetError(NetError::Kind::Closed, "peer closed");
      throw NetError(NetError::Kind::Io, std::string("send: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

void TcpStream::send_all(std::string_view text, Timeout timeout) {
  send_all(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()), timeout);
}

std::size_t TcpStream::fill(Timeout timeout) {
  if (!wait_fd(sock_.fd(), POLLIN, timeout)) throw NetError(NetError::Kind::Timeout, "receive timed out");
  char buf[16384];
  for (;;) {
    ssize_t n = ::recv(sock_.fd(), buf, sizeof buf, 0);
    if (n >= 0) {
      buffered_.append(buf, static_cast<std::size_t>(n));
      return static_cast<std::size_t>(n);
    }
    if (errno == EINTR) continue;
    if (errno == EAGAIN) {
      if (!wait_fd(sock_.fd(), POLLIN, timeout)) throw NetError(NetError::Kind::Timeout, "receive timed out");
      continue;
    }
    if (errno == ECONNRESET) return 0;
    throw NetError(NetError::Kind::Io, std::string("recv: ") + std::strerror(errno));
  }
}

std::size_t TcpStream::recv_some(std::span<std::uint8_t> out, Timeout timeout) {
  if (buffered_.empty() && fill(timeout) == 0) return 0;
  const auto n = std::min(out.size(), buffered_.size());
  std::memcpy(out.data(), buffered_.data(), n);
  buffered_.erase(0, n);
  return n;
}

void TcpStream::recv_exact(std::span<std::uint8_t> out, Timeout timeout) {
  const auto deadline = Clock::now() + timeout;
  std::size_t got = 0;
  while (got < out.size()) {
    auto left = std::chrono::duration_cast<Timeout>(deadline - Clock::now());
    if (left.count() <= 0) throw NetError(NetError::Kind::Timeout, "receive timed out");
    auto n = recv_some(out.subspan(got), left);
    if (n == 0) throw NetError(NetError::Kind::Closed, "peer closed connection");
    got += n;
  }
}

std::string TcpStream::read_line(Timeout timeout, std::size_t max_len) {
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    auto nl = buffered_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffered_.substr(0, nl);
      buffered_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (buffered_.size() > max_len) throw NetError(NetError::Kind::Io, "line too long");
    auto left = std::chrono::duration_cast<Timeout>(deadline - Clock::now());
    if (left.count() <= 0) throw NetError(NetError::Kind::Timeout, "receive timed out");
    if (fill(left) == 0) throw NetError(NetError::Kind::Closed, "peer closed connection");
  }
}

Bytes TcpStream::read_to_end(Timeout timeout) {
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    auto left = std::chrono::duration_cast<Timeout>(deadline - Clock::now());
    if (left.count() <= 0) throw NetError(NetError::Kind::Timeout, "receive timed out");
    if (fill(left) == 0) break;
  }
  Bytes out(buffered_.begin(), buffered_.end());
  buffered_.clear();
  return out;
}

void TcpStream::shutdown_write() {
  if (sock_.valid()) ::shutdown(sock_.fd(), SHUT_WR);
}

Endpoint TcpStream::local_endpoint() const {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(sock_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  char host[INET_ADDRSTRLEN] = {};
  inet_ntop(AF_INET, &addr.sin_addr, host, sizeof host);
  return Endpoint{host, ntohs(addr.sin_port)};
}

TcpListener TcpListener::bind(const std::string& host, std::uint16_t port) {
  TcpListener l;
  l.sock_ = Socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0));
  if (!l.sock_.valid()) throw NetError(NetError::Kind::Io, "socket() failed");
  int one = 1;
  ::setsockopt(l.sock_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  auto addr = resolve(Endpoint{host, port});
  if (::bind(l.sock_.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    throw NetError(NetError::Kind::Io, "bind " + host + ":" + std::to_string(port) + ": " + std::strerror(errno));
  }
  if (::listen(l.sock_.fd(), 64) != 0) throw NetError(NetError::Kind::Io, "listen failed");
  l.port_ = bound_port(l.sock_.fd());
  return l;
}

std::optional<TcpStream> TcpListener::accept(Timeout timeout) {
  if (!sock_.valid() || !wait_fd(sock_.fd(), POLLIN, timeout)) return std::nullopt;
  int fd = ::accept4(sock_.fd(), nullptr, nullptr, SOCK_CLOEXEC | SOCK_NONBLOCK);
  if (fd < 0) return std::nullopt;
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return TcpStream(Socket(fd));
}

UdpSocket UdpSocket::bind(const std::string& host, std::uint16_t port) {
  UdpSocket u;
  u.sock_ = Socket(::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0));
  if (!u.sock_.valid()) throw NetError(NetError::Kind::Io, "socket() failed");
  auto addr = resolve(Endpoint{host, port});
  if (::bind(u.sock_.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    throw NetError(NetError::Kind::Io, "udp bind failed: " + std::string(std::strerror(errno)));
  }
  u.port_ = bound_port(u.sock_.fd());
  return u;
}

UdpSocket UdpSocket::unbound() { return bind("0.0.0.0", 0); }

void UdpSocket::send_to(const Endpoint& ep, std::span<const std::uint8_t> data) {
  auto addr = resolve(ep);
  ssize_t n = ::sendto(sock_.fd(), data.data(), data.size(), 0,
                       reinterpret_cast<const sockaddr*>(&addr), sizeof addr);
  if (n < 0) throw NetError(NetError::Kind::Io, std::string("sendto: ") + std::strerror(errno));
}

std::optional<Bytes> UdpSocket::recv_from(Timeout timeout, Endpoint* from) {
  if (!wait_fd(sock_.fd(), POLLIN, timeout)) return std::nullopt;
  Bytes buf(65535);
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ssize_t n = ::recvfrom(sock_.fd(), buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&addr), &len);
  if (n < 0) {
    // ICMP port-unreachable surfaces here as ECONNREFUSED; treat as silence.
    return std::nullopt;
  }
  buf.resize(static_cast<std::size_t>(n));
  if (from != nullptr) {
    char host[INET_ADDRSTRLEN] = {};
    inet_ntop(AF_INET, &addr.sin_addr, host, sizeof host);
    *from = Endpoint{host, ntohs(addr.sin_port)};
  }
  return buf;
}

}  // namespace selfheal::net
