#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "selfheal/clock.hpp"

namespace selfheal {

struct Event {
  std::uint64_t generation = 0;
  Duration at{};
  std::string kind;
  std::vector<std::pair<std::string, std::string>> fields;

  // Value of `key`, or empty.
  std::string field(std::string_view key) const;
  bool operator==(const Event&) const = default;
};

// One JSON object per line:
//   {"gen":12,"t_ns":2400000000,"event":"device_lost","mac":"aa:...","port":"5"}
std::string to_json_line(const Event& e);
// Throws std::invalid_argument on a malformed line.
Event parse_json_line(std::string_view line);
// Same event without its timestamp, for comparing runs.
std::string to_untimed_line(const Event& e);

// Append-only structured event stream shared by the monitor and the healing
// engine. Keeps every event in memory and mirrors it to a file when a path
// is configured.
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(const std::filesystem::path& file);

  void append(Event e);
  void append(std::uint64_t generation, Duration at, std::string kind,
              std::vector<std::pair<std::string, std::string>> fields = {});

  std::vector<Event> events() const;
  std::vector<Event> recent(std::size_t n) const;
  std::size_t size() const;
  void flush();

  static std::vector<Event> read_file(const std::filesystem::path& file);

 private:
  mutable std::mutex mu_;
  std::vector<Event> events_;
  std::optional<std::ofstream> out_;
};

}  // namespace selfheal
