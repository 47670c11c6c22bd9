#include "selfheal/sim_device.hpp"

#include <sstream>

namespace selfheal::sim {

namespace {

const net::Timeout kIo{2000};
const net::Timeout kPoll{50};

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

SimDevice::SimDevice(SimDeviceSpec spec, const Clock& clock)
    : clock_(clock),
      name_(std::move(spec.name)),
      mac_(spec.mac),
      conduit_listener_(net::TcpListener::bind("127.0.0.1", 0)),
      ftp_listener_(net::TcpListener::bind("127.0.0.1", 0)),
      characteristics_(spec.characteristics),
      profile_(std::move(spec.profile)),
      reboot_delay_(spec.reboot_delay),
      rng_(std::hash<MacAddress>{}(spec.mac)) {
  for (auto& [name, bytes] : spec.config_files) {
    files_[link::kConfigDir + name] = std::move(bytes);
    active_.insert(name);
  }
  recompute_digest_locked();
  conduit_thread_ = std::thread([this] { conduit_loop(); });
  ftp_thread_ = std::thread([this] { ftp_loop(); });
}

SimDevice::~SimDevice() {
  stop_ = true;
  if (conduit_thread_.joinable()) conduit_thread_.join();
  if (ftp_thread_.joinable()) ftp_thread_.join();
}

link::DeviceEndpoints SimDevice::endpoints() const {
  return {{"127.0.0.1", conduit_listener_.port()}, {"127.0.0.1", ftp_listener_.port()}};
}

void SimDevice::set_ftp_drop_fraction(double fraction) {
  std::lock_guard lock(mu_);
  drop_fraction_ = fraction;
}

void SimDevice::set_reboot_delay(Duration d) {
  std::lock_guard lock(mu_);
  reboot_delay_ = d;
}

void SimDevice::change_config(const std::string& name, Bytes bytes) {
  std::lock_guard lock(mu_);
  files_[link::kConfigDir + name] = std::move(bytes);
  active_.insert(name);
  ++config_revision_;
  recompute_digest_locked();
}

void SimDevice::recompute_digest_locked() {
  std::vector<std::pair<std::string, Bytes>> set;
  for (const auto& name : active_) {
    auto it = files_.find(link::kConfigDir + name);
    set.emplace_back(name, it == files_.end() ? Bytes{} : it->second);
  }
  active_digest_ = link::config_set_digest(set);
}

bool SimDevice::rebooting() const {
  std::lock_guard lock(mu_);
  return clock_.now() < reboot_until_;
}

bool SimDevice::silent() const { return unplugged_ || crashed_ || rebooting(); }

Characteristics SimDevice::characteristics() const {
  std::lock_guard lock(mu_);
  return characteristics_;
}

HardwareProfile SimDevice::profile() const {
  std::lock_guard lock(mu_);
  return profile_;
}

std::map<std::string, Bytes> SimDevice::active_config() const {
  std::lock_guard lock(mu_);
  std::map<std::string, Bytes> out;
  for (const auto& name : active_) {
    auto it = files_.find(link::kConfigDir + name);
    out[name] = it == files_.end() ? Bytes{} : it->second;
  }
  return out;
}

std::uint32_t SimDevice::config_revision() const {
  std::lock_guard lock(mu_);
  return config_revision_;
}

std::uint64_t SimDevice::active_config_digest() const {
  std::lock_guard lock(mu_);
  return active_digest_;
}

std::vector<DeviceMessage> SimDevice::messages() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::uint64_t SimDevice::bytes_stored(const std::string& path) const {
  std::lock_guard lock(mu_);
  auto it = stored_bytes_.find(path);
  return it == stored_bytes_.end() ? 0 : it->second;
}

std::uint64_t SimDevice::firmware_bytes_received() const {
  std::lock_guard lock(mu_);
  return firmware_bytes_;
}

std::size_t SimDevice::mutating_requests() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& m : log_) {
    if (m.kind == "SetCharacteristics" || m.kind == "ActivateConfig" || m.kind == "STOR") ++n;
  }
  return n;
}

void SimDevice::record(std::string kind, std::string detail, std::uint64_t bytes) {
  std::lock_guard lock(mu_);
  log_.push_back(DeviceMessage{clock_.now(), std::move(kind), std::move(detail), bytes});
}

void SimDevice::conduit_loop() {
  while (!stop_) {
    std::optional<net::TcpStream> conn;
    try {
      conn = conduit_listener_.accept(kPoll);
    } catch (const net::NetError&) {
      continue;
    }
    if (!conn) continue;
    if (silent()) continue;  // dropped: closes immediately
    try {
      handle_conduit(std::move(*conn));
    } catch (const std::exception&) {
    }
  }
}

void SimDevice::handle_conduit(net::TcpStream stream) {
  auto req = link::read_frame(stream, kIo);
  if (muted_) {
    // Hold the connection without replying until the client gives up.
    std::uint8_t buf[256];
    for (int i = 0; i < 600 && !stop_; ++i) {
      try {
        if (stream.recv_some(buf, kPoll) == 0) break;
      } catch (const net::NetError& e) {
        if (e.kind() != net::NetError::Kind::Timeout) break;
      }
    }
    return;
  }
  record(link::to_string(req.kind()), "", 0);
  link::ConduitMessage reply{req.correlation_id, answer(req)};
  link::write_frame(stream, reply, kIo);
}

link::Payload SimDevice::answer(const link::ConduitMessage& req) {
  if (!link::is_request(req.kind())) return link::Nack{"not a request"};
  if (nack_next_.exchange(false)) return link::Nack{"refused by device"};

  std::lock_guard lock(mu_);
  if (const auto* set = std::get_if<link::SetCharacteristics>(&req.payload)) {
    characteristics_ = set->characteristics;
    return link::Ack{};
  }
  if (std::holds_alternative<link::Interrogate>(req.payload)) {
    link::InterrogateReply r;
    r.characteristics = characteristics_;
    r.profile = profile_;
    r.config_files.assign(active_.begin(), active_.end());
    r.config_revision = config_revision_;
    r.active_config_digest = active_digest_;
    return r;
  }
  if (std::holds_alternative<link::Heartbeat>(req.payload)) {
    return link::Ack{static_cast<std::uint8_t>(fault_ ? 1 : 0), config_revision_};
  }
  if (const auto* act = std::get_if<link::ActivateConfig>(&req.payload)) {
    if (act->target == link::ActivationTarget::Firmware) {
      if (act->paths.size() != 1) return link::Nack{"expected one firmware image"};
      auto it = files_.find(act->paths.front());
      if (it == files_.end()) return link::Nack{"no such image " + act->paths.front()};
      const std::string text(it->second.begin(), it->second.end());
      const auto first_line = text.substr(0, text.find('\n'));
      try {
        profile_.firmware_version = FirmwareVersion::parse(first_line);
      } catch (const std::invalid_argument&) {
        return link::Nack{"unreadable firmware image"};
      }
      reboot_until_ = clock_.now() + reboot_delay_;
      return link::Rebooting{static_cast<std::uint32_t>(to_millis(reboot_delay_))};
    }
    std::set<std::string> next;
    for (const auto& path : act->paths) {
      if (!starts_with(path, link::kConfigDir) || !files_.contains(path)) return link::Nack{"no such file " + path};
      next.insert(path.substr(std::string(link::kConfigDir).size()));
    }
    active_ = std::move(next);
    ++config_revision_;
    recompute_digest_locked();
    return link::Ack{0, active_digest_};
  }
  return link::Nack{"unsupported request"};
}

void SimDevice::ftp_loop() {
  while (!stop_) {
    std::optional<net::TcpStream> conn;
    try {
      conn = ftp_listener_.accept(kPoll);
    } catch (const net::NetError&) {
      continue;
    }
    if (!conn) continue;
    if (silent()) continue;
    try {
      handle_ftp(std::move(*conn));
    } catch (const std::exception&) {
    }
  }
}

void SimDevice::handle_ftp(net::TcpStream control) {
  auto say = [&](const std::string& line) { control.send_all(line + "\r\n", kIo); };
  say("220 sim device " + name_ + " ready");
  std::optional<net::TcpListener> pasv;
  bool binary = false;

  for (;;) {
    std::string line;
    try {
      line = control.read_line(kIo);
    } catch (const net::NetError&) {
      return;
    }
    if (silent()) return;
    auto space = line.find(' ');
    std::string verb = line.substr(0, space);
    for (auto& c : verb) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const std::string arg = space == std::string::npos ? "" : line.substr(space + 1);

    if (verb == "USER") {
      say("331 password please");
    } else if (verb == "PASS") {
      say("230 logged in");
    } else if (verb == "TYPE") {
      binary = arg == "I";
      say(binary ? "200 binary" : "504 only TYPE I");
    } else if (verb == "SYST") {
      say("215 UNIX Type: L8");
    } else if (verb == "PASV") {
      pasv = net::TcpListener::bind("127.0.0.1", 0);
      const auto p = pasv->port();
      say("227 Entering Passive Mode (127,0,0,1," + std::to_string(p / 256) + "," + std::to_string(p % 256) + ")");
    } else if (verb == "STOR" || verb == "RETR") {
      if (!pasv) {
        say("425 use PASV first");
        continue;
      }
      if (!binary) {
        say("451 binary mode required");
        continue;
      }
      if (verb == "RETR") {
        Bytes bytes;
        {
          std::lock_guard lock(mu_);
          auto it = files_.find(arg);
          if (it == files_.end()) {
            say("550 no such file");
            pasv.reset();
            continue;
          }
          bytes = it->second;
        }
        say("150 opening data connection");
        auto data = pasv->accept(kIo);
        pasv.reset();
        if (!data) {
          say("425 no data connection");
          continue;
        }
        data->send_all(bytes, kIo);
        data->close();
        record("RETR", arg, bytes.size());
        say("226 transfer complete");
        continue;
      }
      say("150 ready for data");
      auto data = pasv->accept(kIo);
      pasv.reset();
      if (!data) {
        say("425 no data connection");
        continue;
      }
      Bytes bytes = data->read_to_end(kIo);
      data->close();
      bool dropped = false;
      {
        std::lock_guard lock(mu_);
        if (drop_fraction_ > 0.0) {
          dropped = std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < drop_fraction_;
        }
        if (!dropped) {
          if (corrupt_next_.exchange(false) && !bytes.empty()) bytes[bytes.size() / 2] ^= 0x5A;
          stored_bytes_[arg] += bytes.size();
          if (starts_with(arg, link::kFirmwareDir)) firmware_bytes_ += bytes.size();
          files_[arg] = bytes;
        }
      }
      record("STOR", arg, bytes.size());
      say(dropped ? "426 connection closed; transfer aborted" : "226 transfer complete");
    } else if (verb == "QUIT") {
      say("221 bye");
      return;
    } else {
      say("502 not implemented");
    }
  }
}

}  // namespace selfheal::sim
