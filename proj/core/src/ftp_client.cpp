#include "selfheal/ftp_client.hpp"

#include <cstdio>

namespace selfheal::link {

namespace {

bool parse_pasv(const std::string& text, net::Endpoint& out) {
  auto open = text.find('(');
  auto close = text.find(')', open == std::string::npos ? 0 : open);
  if (open == std::string::npos || close == std::string::npos) return false;
  unsigned h1, h2, h3, h4, p1, p2;
  const std::string inner = text.substr(open + 1, close - open - 1);
  if (std::sscanf(inner.c_str(), "%u,%u,%u,%u,%u,%u", &h1, &h2, &h3, &h4, &p1, &p2) != 6) return false;
  if (h1 > 255 || h2 > 255 || h3 > 255 || h4 > 255 || p1 > 255 || p2 > 255) return false;
  out.host = std::to_string(h1) + "." + std::to_string(h2) + "." + std::to_string(h3) + "." + std::to_string(h4);
  out.port = static_cast<std::uint16_t>(p1 * 256 + p2);
  return true;
}

}  // namespace

const char* to_string(FtpError::Kind kind) {
  switch (kind) {
    case FtpError::Kind::ConnectFailure: return "ConnectFailure";
    case FtpError::Kind::TransferAborted: return "TransferAborted";
    case FtpError::Kind::ServerError: return "ServerError";
  }
  return "?";
}

FtpSession::FtpSession(net::TcpStream control, net::Endpoint server, FtpOptions options)
    : control_(std::move(control)), server_(std::move(server)), options_(std::move(options)), open_(true) {}

FtpSession::~FtpSession() {
  if (open_ && control_.valid()) {
    try {
      quit();
    } catch (...) {
    }
  }
}

FtpSession FtpSession::open(const net::Endpoint& server, const FtpOptions& options) {
  net::TcpStream control;
  try {
    control = net::TcpStream::connect(server, options.connect_timeout);
  } catch (const net::NetError& e) {
    throw FtpError(FtpError::Kind::ConnectFailure, e.what());
  }
  FtpSession session(std::move(control), server, options);
  try {
    auto greeting = session.read_reply();
    if (greeting.code != 220) throw FtpError(FtpError::Kind::ConnectFailure, "greeting: " + greeting.text);
    auto user = session.command("USER " + options.user);
    if (user.code == 331) user = session.command("PASS " + options.password);
    if (user.code != 230) throw FtpError(FtpError::Kind::ConnectFailure, "login refused: " + user.text);
    auto type = session.command("TYPE I");
    if (type.code != 200) throw FtpError(FtpError::Kind::ServerError, "TYPE I refused: " + type.text);
  } catch (const net::NetError& e) {
    session.open_ = false;
    throw FtpError(FtpError::Kind::ConnectFailure, e.what());
  } catch (...) {
    session.open_ = false;
    throw;
  }
  return session;
}

FtpReply FtpSession::read_reply() {
  auto line = control_.read_line(options_.io_timeout);
  if (line.size() < 3) throw FtpError(FtpError::Kind::ServerError, "short reply: " + line);
  FtpReply reply;
  try {
    reply.code = std::stoi(line.substr(0, 3));
  } catch (const std::exception&) {
    throw FtpError(FtpError::Kind::ServerError, "bad reply: " + line);
  }
  reply.text = line;
  if (line.size() > 3 && line[3] == '-') {
    const std::string terminator = line.substr(0, 3) + " ";
    for (;;) {
      auto next = control_.read_line(options_.io_timeout);
      reply.text += "\n" + next;
      if (next.rfind(terminator, 0) == 0) break;
    }
  }
  return reply;
}

FtpReply FtpSession::command(const std::string& line) {
  control_.send_all(line + "\r\n", options_.io_timeout);
  return read_reply();
}

net::TcpStream FtpSession::open_passive() {
  auto reply = command("PASV");
  net::Endpoint data_ep;
  if (reply.code != 227 || !parse_pasv(reply.text, data_ep)) {
    throw FtpError(FtpError::Kind::ServerError, "PASV failed: " + reply.text);
  }
  try {
    return net::TcpStream::connect(data_ep, options_.connect_timeout);
  } catch (const net::NetError& e) {
    throw FtpError(FtpError::Kind::ConnectFailure, std::string("data connection: ") + e.what());
  }
}

void FtpSession::store(const std::string& path, std::span<const std::uint8_t> bytes) {
  try {
    auto data = open_passive();
    auto start = command("STOR " + path);
    if (start.code != 150 && start.code != 125) {
      throw FtpError(FtpError::Kind::ServerError, "STOR refused: " + start.text);
    }
    bool send_failed = false;
    try {
      data.send_all(bytes, options_.io_timeout);
    } catch (const net::NetError&) {
      send_failed = true;
    }
    data.close();
    auto done = read_reply();
    if (done.code == 226 || done.code == 250) {
      if (send_failed) throw FtpError(FtpError::Kind::TransferAborted, "data connection lost during STOR");
      return;
    }
    if (done.code == 426 || done.code == 451) throw FtpError(FtpError::Kind::TransferAborted, done.text);
    throw FtpError(FtpError::Kind::ServerError, "STOR failed: " + done.text);
  } catch (const net::NetError& e) {
    open_ = false;
    throw FtpError(FtpError::Kind::TransferAborted, e.what());
  }
}

Bytes FtpSession::retrieve(const std::string& path) {
  try {
    auto data = open_passive();
    auto start = command("RETR " + path);
    if (start.code == 550) throw FtpError(FtpError::Kind::ServerError, "no such file: " + path);
    if (start.code != 150 && start.code != 125) {
      throw FtpError(FtpError::Kind::ServerError, "RETR refused: " + start.text);
    }
    Bytes bytes;
    bool read_failed = false;
    try {
      bytes = data.read_to_end(options_.io_timeout);
    } catch (const net::NetError&) {
      read_failed = true;
    }
    auto done = read_reply();
    if ((done.code == 226 || done.code == 250) && !read_failed) return bytes;
    if (done.code == 426 || done.code == 451 || read_failed) throw FtpError(FtpError::Kind::TransferAborted, done.text);
    throw FtpError(FtpError::Kind::ServerError, "RETR failed: " + done.text);
  } catch (const net::NetError& e) {
    open_ = false;
    throw FtpError(FtpError::Kind::TransferAborted, e.what());
  }
}

void FtpSession::quit() {
  if (!open_) return;
  open_ = false;
  try {
    command("QUIT");
  } catch (const net::NetError&) {
  } catch (const FtpError&) {
  }
  control_.close();
}

TransferReceipt ftp_put(const net::Endpoint& server, const std::string& path, std::span<const std::uint8_t> bytes,
                        const FtpOptions& options) {
  auto session = FtpSession::open(server, options);
  session.store(path, bytes);
  auto readback = session.retrieve(path);
  session.quit();
  return TransferReceipt{path, readback.size(), digest(readback)};
}

Bytes ftp_get(const net::Endpoint& server, const std::string& path, const FtpOptions& options) {
  auto session = FtpSession::open(server, options);
  auto bytes = session.retrieve(path);
  session.quit();
  return bytes;
}

}  // namespace selfheal::link
