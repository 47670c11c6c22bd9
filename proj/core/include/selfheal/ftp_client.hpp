#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "selfheal/digest.hpp"
#include "selfheal/net.hpp"

// Passive-mode, binary-type FTP client: just the subset needed to push and
// read back files on a device (USER/PASS, TYPE I, PASV, STOR, RETR, QUIT).
namespace selfheal::link {

class FtpError : public std::runtime_error {
 public:
  enum class Kind { ConnectFailure, TransferAborted, ServerError };
  FtpError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(FtpError::Kind kind);

struct FtpOptions {
  net::Timeout connect_timeout{5000};
  net::Timeout io_timeout{5000};
  std::string user = "anonymous";
  std::string password = "selfheal@";
};

struct TransferReceipt {
  std::string remote_path;
  std::uint64_t byte_count = 0;
  std::uint64_t digest = 0;
};

struct FtpReply {
  int code = 0;
  std::string text;
};

class FtpSession {
 public:
  static FtpSession open(const net::Endpoint& server, const FtpOptions& options);
  ~FtpSession();
  FtpSession(FtpSession&&) = default;
  FtpSession& operator=(FtpSession&&) = default;

  void store(const std::string& path, std::span<const std::uint8_t> bytes);
  Bytes retrieve(const std::string& path);
  void quit();

 private:
  FtpSession(net::TcpStream control, net::Endpoint server, FtpOptions options);

  FtpReply read_reply();
  FtpReply command(const std::string& line);
  net::TcpStream open_passive();

  net::TcpStream control_;
  net::Endpoint server_;
  FtpOptions options_;
  bool open_ = false;
};

// Stores `bytes` at `path` and reads them back; the receipt describes what
// the server actually holds, so a digest differing from digest(bytes) means
// the file was damaged in flight.
TransferReceipt ftp_put(const net::Endpoint& server, const std::string& path, std::span<const std::uint8_t> bytes,
                        const FtpOptions& options = {});

Bytes ftp_get(const net::Endpoint& server, const std::string& path, const FtpOptions& options = {});

}  // namespace selfheal::link
