#include <algorithm>
#include <set>

#include "doctest.h"
#include "selfheal/experiment.hpp"
#include "selfheal/scenario.hpp"
#include "temp_dir.hpp"

using namespace selfheal;
using namespace selfheal::sim;
using namespace std::chrono_literals;

namespace {

const char* kDevices = R"(
DEVICE amp1  mac=02:00:00:00:01:01 type=Amp fw=2.1.0 addr=101 ip=10.0.0.101 hw.ch=4 config.preset="gain=-3"
DEVICE amp1r mac=02:00:00:00:01:02 type=Amp fw=2.0.0 addr=900 ip=10.0.0.250 hw.ch=4
DEVICE amp1h mac=02:00:00:00:01:03 type=Amp fw=2.0.0 addr=900 ip=10.0.0.250 hw.ch=4
DEVICE spk   mac=02:00:00:00:02:01 type=Spk fw=1.0.0 addr=201 ip=10.0.0.201 hw.ch=2
)";

ScenarioReport run(const std::string& body) {
  testing_support::TempDir dir("scn");
  return run_scenario(parse_script(std::string(kDevices) + body), RunOptions{dir.path()});
}

std::size_t count(const ScenarioReport& r, const std::string& kind) {
  return static_cast<std::size_t>(
      std::count_if(r.events.begin(), r.events.end(), [&](const Event& e) { return e.kind == kind; }));
}

const Event* first(const ScenarioReport& r, const std::string& kind) {
  for (const auto& e : r.events)
    if (e.kind == kind) return &e;
  return nullptr;
}

int script_error_line(const std::string& text) {
  try {
    parse_script(text);
  } catch (const ScriptError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("tokenizer groups quotes and unescapes") {
  auto t = tokenize(R"(DEVICE a type="Crown I-Tech HD" config.x="a\nb \"q\"")");
  REQUIRE(t.size() == 4);
  CHECK(t[2] == "type=Crown I-Tech HD");
  CHECK(t[3] == "config.x=a\nb \"q\"");
  CHECK_THROWS_AS(tokenize("x \"open", 4), ScriptError);
}

TEST_CASE("script errors carry the line") {
  std::string d = "DEVICE a mac=02:00:00:00:00:01 type=A fw=1.0.0\n";
  CHECK(script_error_line(d + "AT 2s attach 1 a\nAT 1s detach a\n") == 3);
  CHECK(script_error_line(d + "AT 0s attach 1 a\nAT 1s attach 2 a\n") == 3);
  CHECK(script_error_line(d + "AT 0s detach a\n") == 2);
  CHECK(script_error_line(d + "AT 0s attach 1 ghost\n") == 2);
  CHECK(script_error_line(d + "AT 0s explode a\n") == 2);
  CHECK(script_error_line(d + "AT soon attach 1 a\n") == 2);
  CHECK(script_error_line(d + "AT 0s attach 0 a\n") == 2);
  CHECK(script_error_line(d + "SET poll_period 0ms\n") == 2);
  CHECK(script_error_line(d + "SET mystery 1\n") == 2);
  CHECK(script_error_line(d + "DEVICE a mac=02:00:00:00:00:02 type=A fw=1.0.0\n") == 2);
  CHECK(script_error_line(d + "DEVICE b mac=02:00:00:00:00:01 type=A fw=1.0.0\n") == 2);
  CHECK(script_error_line("DEVICE a mac=zz type=A fw=1.0.0\n") == 1);
  CHECK(script_error_line(d + "AT 0s attach 1 a\nAT 1s advance 2s\n# fine\n\n") == -1);
}

TEST_CASE("an empty script runs nothing") {
  auto r = run("");
  CHECK(r.events.empty());
  CHECK(r.heals.empty());
  CHECK(r.ticks == 0);
}

TEST_CASE("single swap heals and the replacement takes the old identity") {
  testing_support::TempDir dir("scn");
  ScenarioRunner runner(parse_script(std::string(kDevices) + R"(
AT 0s attach 3 amp1
AT 0s attach 4 spk
AT 1s detach amp1
AT 2s attach 3 amp1r
AT 2s advance 3s
)"),
                        RunOptions{dir.path()});
  auto r = runner.run();
  REQUIRE(r.heals.size() == 1);
  CHECK(r.heals[0].candidate_name == "amp1r");
  CHECK(r.heals[0].elapsed() < 10 * 100ms + 500ms);
  auto& old = runner.harness().device("amp1");
  auto& fresh = runner.harness().device("amp1r");
  CHECK(fresh.characteristics() == old.characteristics());
  CHECK(fresh.profile().firmware_version == old.profile().firmware_version);
  CHECK(fresh.active_config_digest() == old.active_config_digest());
  auto* rec = r.final_inventory.find(fresh.mac());
  REQUIRE(rec != nullptr);
  CHECK(rec->status == DeviceStatus::Online);
  CHECK(r.final_inventory.find(old.mac())->status == DeviceStatus::Retired);
  // bystander untouched
  CHECK(runner.harness().device("spk").mutating_requests() == 0);
}

TEST_CASE("two runs of one script produce identical reports") {
  const std::string body = R"(
AT 0s attach 3 amp1
AT 0s attach 4 spk
AT 1s detach amp1
AT 1.5s detach spk
AT 2s attach 3 amp1r
AT 2.2s attach 4 amp1h
AT 2.2s advance 3s
)";
  auto a = run(body);
  auto b = run(body);
  CHECK(format_report(a) == format_report(b));
  CHECK(format_experiment_table(a) == format_experiment_table(b));
  // wrong type on port 4, nothing to heal there
  CHECK(a.heals.size() == 1);
  CHECK(count(a, "match_failed") >= 1);
}

TEST_CASE("equal firmware skips the image transfer") {
  testing_support::TempDir dir("scn");
  ScenarioRunner runner(parse_script(R"(
DEVICE a  mac=02:00:00:00:03:01 type=Amp fw=2.0.0 addr=11 ip=10.0.0.11 hw.ch=4 config.p=x
DEVICE b  mac=02:00:00:00:03:02 type=Amp fw=2.0.0 addr=900 ip=10.0.0.250 hw.ch=4
AT 0s attach 1 a
AT 1s detach a
AT 2s attach 1 b
AT 2s advance 2s
)"),
                        RunOptions{dir.path()});
  auto r = runner.run();
  REQUIRE(r.heals.size() == 1);
  CHECK(runner.harness().device("b").firmware_bytes_received() == 0);
  CHECK(count(r, "firmware_sent") == 0);
}

TEST_CASE("crash is reported through heartbeat, silence without it") {
  const std::string body = R"(
AT 0s attach 3 amp1
AT 1s crash amp1
AT 1s advance 2s
)";
  auto with = run(body);
  const auto* f = first(with, "device_failed");
  REQUIRE(f != nullptr);
  CHECK(f->field("cause") == "Reported");
  auto without = run("SET heartbeat false\n" + body);
  CHECK(first(without, "device_failed") == nullptr);
}

TEST_CASE("reported fault opens a failure") {
  auto r = run(R"(
AT 0s attach 3 amp1
AT 1s report_fault amp1
AT 1s advance 1s
)");
  const auto* f = first(r, "device_failed");
  REQUIRE(f != nullptr);
  CHECK(f->field("cause") == "Reported");
}

TEST_CASE("failed device coming back aborts the job") {
  auto r = run(R"(
AT 0s attach 3 amp1
AT 1s detach amp1
AT 2s attach 3 amp1r
AT 2s reboot_delay amp1r 800ms
AT 2.25s attach 5 amp1
AT 2.25s advance 2s
)");
  CHECK(r.heals.empty());
  REQUIRE(!r.jobs.empty());
  CHECK(r.jobs[0].abort_reason == AbortReason::FailedDeviceReturned);
  CHECK(count(r, "device_returned") == 1);
}

// Each fault aimed at one stage of the single swap. The swap's tick grid:
// job at 2.0s, characteristics 2.1s, image 2.2s, reboot done 2.7s, config 2.8s.
TEST_CASE("abort matrix") {
  struct Row {
    const char* name;
    const char* fault;
    AbortReason reason;
    HealingStage last_stage;
  };
  const Row rows[] = {
      {"mute before characteristics", "AT 2.05s mute amp1r", AbortReason::ConduitTimeout, HealingStage::Matched},
      {"ftp drop on image", "AT 2.05s drop_ftp amp1r 1.0", AbortReason::TransferFailure,
       HealingStage::CharacteristicsMapped},
      {"corrupt image", "AT 2.15s corrupt_next_transfer amp1r", AbortReason::ChecksumMismatch,
       HealingStage::CharacteristicsMapped},
      {"reboot overrun", "AT 2s reboot_delay amp1r 5s", AbortReason::RebootTimeout,
       HealingStage::CharacteristicsMapped},
      {"ftp drop on config", "AT 2.75s drop_ftp amp1r 1.0", AbortReason::TransferFailure,
       HealingStage::FirmwareMapped},
      {"corrupt config", "AT 2.75s corrupt_next_transfer amp1r", AbortReason::ChecksumMismatch,
       HealingStage::FirmwareMapped},
  };
  for (const auto& row : rows) {
    CAPTURE(std::string(row.name));
    auto r = run(std::string(R"(
AT 0s attach 3 amp1
AT 1s detach amp1
AT 2s attach 3 amp1r
)") + row.fault + R"(
AT 6s detach amp1r
AT 7s attach 3 amp1h
AT 7s advance 3s
)");
    REQUIRE(r.jobs.size() >= 2);
    CHECK(r.jobs[0].stage == HealingStage::Aborted);
    CHECK(r.jobs[0].abort_reason == row.reason);
    CHECK(r.jobs[0].stage_timestamps.count(row.last_stage) == 1);
    // one-shot faults let amp1r heal on a rematch; its own later detach is
    // then healed by amp1h
    REQUIRE(!r.heals.empty());
    CHECK(r.heals[0].failed == MacAddress::parse("02:00:00:00:01:01"));
    CHECK(r.heals.back().candidate_name == "amp1h");
    CHECK(r.jobs.back().stage == HealingStage::Healed);
  }
}

TEST_CASE("shipped scenarios heal every failure they cause") {
  const std::filesystem::path dir = SELFHEAL_SOURCE_DIR "/scenarios";
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".scn") continue;
    ++seen;
    CAPTURE(entry.path().filename().string());
    testing_support::TempDir work("shipped");
    auto r = run_scenario(load_script(entry.path()), RunOptions{work.path()});
    std::set<MacAddress> failed, healed;
    for (const auto& e : r.events) {
      if (e.kind == "device_failed") failed.insert(MacAddress::parse(e.field("mac")));
    }
    for (const auto& h : r.heals) healed.insert(h.failed);
    CHECK_FALSE(failed.empty());
    CHECK(failed == healed);
  }
  CHECK(seen >= 5);
}
