#include "selfheal/event_log.hpp"

#include <stdexcept>

#include <json.hpp>

namespace selfheal {

std::string Event::field(std::string_view key) const {
  for (const auto& [k, v] : fields) {
    if (k == key) return v;
  }
  return {};
}

std::string to_json_line(const Event& e) {
  nlohmann::ordered_json j;
  j["gen"] = e.generation;
  j["t_ns"] = e.at.count();
  j["event"] = e.kind;
  for (const auto& [k, v] : e.fields) j[k] = v;
  return j.dump();
}

Event parse_json_line(std::string_view line) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(line);
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("bad event line: ") + ex.what());
  }
  if (!j.is_object() || !j.contains("gen") || !j.contains("t_ns") || !j.contains("event")) {
    throw std::invalid_argument("event line missing gen/t_ns/event");
  }
  Event e;
  e.generation = j["gen"].get<std::uint64_t>();
  e.at = Duration(j["t_ns"].get<std::int64_t>());
  e.kind = j["event"].get<std::string>();
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "gen" || it.key() == "t_ns" || it.key() == "event") continue;
    e.fields.emplace_back(it.key(), it.value().is_string() ? it.value().get<std::string>() : it.value().dump());
  }
  return e;
}

std::string to_untimed_line(const Event& e) {
  std::string out = std::to_string(e.generation) + " " + e.kind;
  for (const auto& [k, v] : e.fields) {
    if (k.ends_with("_ns") || k.ends_with("_ms")) continue;
    out += " " + k + "=" + v;
  }
  return out;
}

EventLog::EventLog(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  out_.emplace(file, std::ios::app);
  if (!*out_) throw std::runtime_error("cannot open event log " + file.string());
}

void EventLog::append(Event e) {
  std::lock_guard lock(mu_);
  if (out_) *out_ << to_json_line(e) << '\n';
  events_.push_back(std::move(e));
}

void EventLog::append(std::uint64_t generation, Duration at, std::string kind,
                      std::vector<std::pair<std::string, std::string>> fields) {
  append(Event{generation, at, std::move(kind), std::move(fields)});
}

std::vector<Event> EventLog::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::vector<Event> EventLog::recent(std::size_t n) const {
  std::lock_guard lock(mu_);
  const auto start = events_.size() > n ? events_.size() - n : 0;
  return {events_.begin() + static_cast<std::ptrdiff_t>(start), events_.end()};
}

std::size_t EventLog::size() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

void EventLog::flush() {
  std::lock_guard lock(mu_);
  if (out_) out_->flush();
}

std::vector<Event> EventLog::read_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  std::vector<Event> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_json_line(line));
  }
  return out;
}

}  // namespace selfheal
