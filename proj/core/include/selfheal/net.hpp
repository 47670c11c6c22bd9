#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "selfheal/digest.hpp"

namespace selfheal::net {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
  bool operator==(const Endpoint&) const = default;
};

// "host:port" or "host" (then `default_port`). Throws std::invalid_argument.
Endpoint parse_endpoint(std::string_view text, std::uint16_t default_port = 0);

class NetError : public std::runtime_error {
 public:
  enum class Kind { ConnectFailed, Timeout, Closed, Io };
  NetError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

using Timeout = std::chrono::milliseconds;

// Owns one file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void close();

 private:
  int fd_ = -1;
};

class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(Socket sock) : sock_(std::move(sock)) {}

  static TcpStream connect(const Endpoint& ep, Timeout timeout);

  void send_all(std::span<const std::uint8_t> data, Timeout timeout);
  void send_all(std::string_view text, Timeout timeout);

  // Reads up to `max` bytes; returns 0 on orderly shutdown by the peer.
  std::size_t recv_some(std::span<std::uint8_t> out, Timeout timeout);
  // Throws NetError(Closed) when the peer closes early.
  void recv_exact(std::span<std::uint8_t> out, Timeout timeout);
  // Reads through '\n'; strips the trailing "\r\n" or "\n".
  std::string read_line(Timeout timeout, std::size_t max_len = 4096);
  // Reads until peer closes.
  Bytes read_to_end(Timeout timeout);

  void shutdown_write();
  void close() { sock_.close(); buffered_.clear(); }
  bool valid() const { return sock_.valid(); }

  // Local/peer port of the connection, for passive-mode bookkeeping.
  Endpoint local_endpoint() const;

 private:
  std::size_t fill(Timeout timeout);

  Socket sock_;
  std::string buffered_;
};

class TcpListener {
 public:
  // Port 0 picks an ephemeral port.
  static TcpListener bind(const std::string& host, std::uint16_t port);

  std::uint16_t port() const { return port_; }
  std::optional<TcpStream> accept(Timeout timeout);
  void close() { sock_.close(); }

 private:
  Socket sock_;
  std::uint16_t port_ = 0;
};

class UdpSocket {
 public:
  static UdpSocket bind(const std::string& host, std::uint16_t port);
  static UdpSocket unbound();

  std::uint16_t port() const { return port_; }
  void send_to(const Endpoint& ep, std::span<const std::uint8_t> data);
  // Returns nullopt on timeout.
  std::optional<Bytes> recv_from(Timeout timeout, Endpoint* from = nullptr);

 private:
  Socket sock_;
  std::uint16_t port_ = 0;
};

}  // namespace selfheal::net
