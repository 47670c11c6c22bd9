#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfheal/healing_engine.hpp"
#include "selfheal/inventory.hpp"

namespace selfheal {

// Control-loop state kept across restarts.
struct PersistedState {
  std::uint64_t generation = 0;
  Inventory inventory;
  std::vector<HealingJob> jobs;
};

class StateFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string state_to_json(const PersistedState& state);
// Throws StateFileError.
PersistedState state_from_json(const std::string& text);

// Written to a temp file and renamed over `path`.
void save_state(const std::filesystem::path& path, const PersistedState& state);
// nullopt when the file does not exist.
std::optional<PersistedState> load_state(const std::filesystem::path& path);

}  // namespace selfheal
