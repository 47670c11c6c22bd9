#include "selfheal/status_server.hpp"

namespace selfheal {

StatusServer::StatusServer(std::uint16_t port, Handler handler)
    : listener_(net::TcpListener::bind("127.0.0.1", port)), handler_(std::move(handler)) {
  thread_ = std::thread([this] { serve(); });
}

StatusServer::~StatusServer() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
}

void StatusServer::serve() {
  const net::Timeout io{1000};
  while (!stop_) {
    std::optional<net::TcpStream> conn;
    try {
      conn = listener_.accept(net::Timeout(100));
    } catch (const net::NetError&) {
      continue;
    }
    if (!conn) continue;
    try {
      auto cmd = conn->read_line(io);
      conn->send_all(handler_(cmd), io);
    } catch (const std::exception&) {
    }
  }
}

std::string query_status(const net::Endpoint& daemon, const std::string& command, net::Timeout timeout) {
  auto stream = net::TcpStream::connect(daemon, timeout);
  stream.send_all(command + "\n", timeout);
  stream.shutdown_write();
  auto bytes = stream.read_to_end(timeout);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace selfheal
