#include "selfheal/clock.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace selfheal {

SteadyClock::SteadyClock() : origin_(std::chrono::steady_clock::now()) {}

Duration SteadyClock::now() const {
  return std::chrono::duration_cast<Duration>(std::chrono::steady_clock::now() - origin_);
}

void VirtualClock::set(Duration t) {
  auto cur = now_.load(std::memory_order_acquire);
  while (t.count() > cur &&
         !now_.compare_exchange_weak(cur, t.count(), std::memory_order_acq_rel)) {
  }
}

Duration parse_duration(std::string_view text) {
  std::size_t split = 0;
  while (split < text.size() &&
         (std::isdigit(static_cast<unsigned char>(text[split])) || text[split] == '.')) {
    ++split;
  }
  if (split == 0) throw std::invalid_argument("bad duration: " + std::string(text));
  const std::string number(text.substr(0, split));
  const std::string_view unit = text.substr(split);

  double value = 0;
  try {
    std::size_t used = 0;
    value = std::stod(number, &used);
    if (used != number.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw std::invalid_argument("bad duration: " + std::string(text));
  }

  double scale = 0;
  if (unit == "ns") scale = 1;
  else if (unit == "us") scale = 1e3;
  else if (unit == "ms") scale = 1e6;
  else if (unit == "s" || unit.empty()) scale = 1e9;
  else if (unit == "m") scale = 60e9;
  else throw std::invalid_argument("bad duration unit: " + std::string(text));

  return Duration(static_cast<std::int64_t>(std::llround(value * scale)));
}

std::string format_duration(Duration d) {
  const auto ns = d.count();
  if (ns != 0 && ns % 1'000'000'000 == 0) return std::to_string(ns / 1'000'000'000) + "s";
  if (ns != 0 && ns % 1'000'000 == 0) return std::to_string(ns / 1'000'000) + "ms";
  if (ns != 0 && ns % 1'000 == 0) return std::to_string(ns / 1'000) + "us";
  return std::to_string(ns) + "ns";
}

}  // namespace selfheal
