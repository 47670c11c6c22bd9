#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace selfheal {

// Monotonic time since the clock's origin. Both the steady clock and the
// virtual clock report this type so every component is clock-agnostic.
using Duration = std::chrono::nanoseconds;
using Millis = std::chrono::milliseconds;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Duration now() const = 0;
};

class SteadyClock final : public Clock {
 public:
  SteadyClock();
  Duration now() const override;

 private:
  std::chrono::steady_clock::time_point origin_;
};

// Driven explicitly by a scenario engine. Never goes backwards.
class VirtualClock final : public Clock {
 public:
  explicit VirtualClock(Duration start = Duration::zero()) : now_(start.count()) {}

  Duration now() const override { return Duration(now_.load(std::memory_order_acquire)); }

  // Moves the clock to `t`; requests to move backwards are ignored.
  void set(Duration t);
  void advance(Duration d) { set(now() + d); }

 private:
  std::atomic<std::int64_t> now_;
};

// Parses "250ms", "2s", "1.5s", "3m", "100us". Throws std::invalid_argument.
Duration parse_duration(std::string_view text);

// Renders with the coarsest exact unit ("2s", "150ms", "10us").
std::string format_duration(Duration d);

inline double to_seconds(Duration d) { return std::chrono::duration<double>(d).count(); }
inline std::int64_t to_millis(Duration d) {
  return std::chrono::duration_cast<Millis>(d).count();
}

}  // namespace selfheal
