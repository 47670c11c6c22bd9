#pragma once

#include <filesystem>
#include <string>

#include "selfheal/scenario.hpp"

namespace selfheal {

// Runs a swap-out scenario under the virtual clock and tabulates the time
// from each replacement's connection to its Healed event.
struct ExperimentResult {
  sim::ScenarioReport report;
  std::string table;
};

// "Crown I-Tech HD (Quantity = 2), Crown DCiN 300N (Quantity = 1)"
std::string describe_mix(const sim::ScenarioReport& report);

// One row per heal plus a batch row; only simulated times, so the text is
// identical across runs of the same scenario.
std::string format_experiment_table(const sim::ScenarioReport& report);

ExperimentResult run_experiment(const std::filesystem::path& scenario, const std::filesystem::path& work_dir);

}  // namespace selfheal
