#include "selfheal/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace selfheal {

namespace {

std::string seconds(Duration d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", to_seconds(d));
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string describe_mix(const sim::ScenarioReport& report) {
  std::map<std::string, int> by_type;
  for (const auto& h : report.heals) ++by_type[h.device_type];
  std::string out;
  for (const auto& [type, n] : by_type) {
    if (!out.empty()) out += ", ";
    out += type + " (Quantity = " + std::to_string(n) + ")";
  }
  return out.empty() ? "(no heals)" : out;
}

std::string format_experiment_table(const sim::ScenarioReport& report) {
  std::size_t type_w = 12;
  for (const auto& h : report.heals) type_w = std::max(type_w, h.device_type.size() + 2);
  std::ostringstream out;
  out << pad("Device", type_w) << pad("Port", 6) << pad("Failed", 19) << pad("Replacement", 19)
      << "Self-healing time (s)\n";
  auto heals = report.heals;
  std::sort(heals.begin(), heals.end(), [](const auto& a, const auto& b) {
    return std::tie(a.healed_at, a.port, a.candidate) < std::tie(b.healed_at, b.port, b.candidate);
  });
  Duration first_attach = Duration::max();
  Duration last_heal{};
  for (const auto& h : heals) {
    out << pad(h.device_type, type_w) << pad(std::to_string(h.port), 6) << pad(h.failed.str(), 19)
        << pad(h.candidate.str(), 19) << seconds(h.elapsed()) << "\n";
    first_attach = std::min(first_attach, h.attached_at);
    last_heal = std::max(last_heal, h.healed_at);
  }
  out << "batch: " << describe_mix(report) << "  ";
  out << "total " << (heals.empty() ? std::string("-") : seconds(last_heal - first_attach)) << " s\n";
  return out.str();
}

ExperimentResult run_experiment(const std::filesystem::path& scenario, const std::filesystem::path& work_dir) {
  auto script = sim::load_script(scenario);
  sim::RunOptions options;
  options.work_dir = work_dir;
  ExperimentResult r;
  r.report = sim::run_scenario(script, options);
  r.table = format_experiment_table(r.report);
  return r;
}

}  // namespace selfheal
