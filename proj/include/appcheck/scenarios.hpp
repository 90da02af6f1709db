#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "appcheck/activity_type.hpp"
#include "appcheck/lexicon.hpp"
#include "appcheck/simdevice.hpp"

namespace appcheck::scenarios {

enum class Severity { Logical, Crash };

std::string_view to_string(Severity severity);

struct BugFinding {
  std::string screen_id;  // activity name the scenario ran on
  ActivityType classified_type = ActivityType::Splash;
  std::string check_id;
  std::string description;
  Severity severity = Severity::Logical;

  bool operator==(const BugFinding&) const = default;
};

struct Inconclusive {
  std::string check_id;
  std::string reason;

  bool operator==(const Inconclusive&) const = default;
};

struct ScenarioOutcome {
  std::vector<BugFinding> findings;
  int checks_run = 0;
  std::vector<Inconclusive> inconclusive;
};

struct Credentials {
  std::string username;
  std::string password;
};

struct ScenarioConfig {
  Credentials credentials;
  const lexicon::Lexicon* lexicon = nullptr;  // builtin when null
  std::uint64_t seed = 0;
  int splash_timeout_ms = 10000;
};

/// Dispatches to the scenario for the classified type and stamps every
/// finding with the device's current activity and the classified type.
/// Checks run on device clones, so the caller's device is left untouched;
/// a crash observed during a check becomes a Crash-severity finding and
/// aborts the scenario. A missing element makes a check inconclusive, not a
/// finding (except the advertisement close control, whose absence is itself
/// the defect under test).
ScenarioOutcome run_scenario(ActivityType type, const sim::SimDevice& device,
                             const ScenarioConfig& config);

// The seven per-type test programs. Check ids are stable strings named after
// the failure mode (e.g. "login-empty-bypass"); see docs/formats.md.
ScenarioOutcome splash_scenario(const sim::SimDevice& device, const ScenarioConfig& config);
ScenarioOutcome ad_scenario(const sim::SimDevice& device, const ScenarioConfig& config);
ScenarioOutcome login_scenario(const sim::SimDevice& device, const ScenarioConfig& config);
ScenarioOutcome portal_scenario(const sim::SimDevice& device, const ScenarioConfig& config);
ScenarioOutcome mail_scenario(const sim::SimDevice& device, const ScenarioConfig& config);
ScenarioOutcome browser_scenario(const sim::SimDevice& device, const ScenarioConfig& config);
ScenarioOutcome todo_scenario(const sim::SimDevice& device, const ScenarioConfig& config);

/// Seeded random alphanumeric string, used for the invalid-credential and
/// invalid-recipient probes. Deterministic per (seed, salt).
std::string random_alnum(std::uint64_t seed, std::uint64_t salt, int length = 12);

}  // namespace appcheck::scenarios
