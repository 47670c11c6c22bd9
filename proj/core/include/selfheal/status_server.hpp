#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>

#include "selfheal/net.hpp"

namespace selfheal {

// Local query channel: the client sends one command line ("STATUS" or
// "TABLE"), the server writes the answer and closes.
class StatusServer {
 public:
  using Handler = std::function<std::string(const std::string& command)>;

  // Port 0 picks an ephemeral port. Binds to loopback only.
  StatusServer(std::uint16_t port, Handler handler);
  ~StatusServer();
  StatusServer(const StatusServer&) = delete;
  StatusServer& operator=(const StatusServer&) = delete;

  std::uint16_t port() const { return listener_.port(); }

 private:
  void serve();

  net::TcpListener listener_;
  Handler handler_;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

// Throws net::NetError when the daemon is not reachable.
std::string query_status(const net::Endpoint& daemon, const std::string& command, net::Timeout timeout);

}  // namespace selfheal
