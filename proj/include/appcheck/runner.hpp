#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "appcheck/dataset.hpp"
#include "appcheck/learn.hpp"
#include "appcheck/scenarios.hpp"
#include "appcheck/simdevice.hpp"

namespace appcheck::runner {

/// Event mix of the random monkey. Weights must sum to 1.
struct MonkeyMix {
  double tap = 0.60;
  double swipe = 0.15;
  double long_press = 0.10;
  double text = 0.10;
  double back = 0.05;
};

struct RunConfig {
  std::int64_t time_budget_ms = 120000;
  std::string model_path;
  std::string lexicon_path;
  scenarios::Credentials credentials{"demo", "hunter2"};
  std::uint64_t explore_seed = 1;
  std::uint64_t monkey_seed = 1;
  std::uint64_t scenario_seed = 1;
  int monkey_event_count = 50000;
  MonkeyMix monkey_mix;
  int splash_timeout_ms = 10000;
};

/// Throws std::invalid_argument when budget, event count or the mix weights
/// are out of contract.
void validate_config(const RunConfig& config);

/// Applies a run-config file (JSON, docs/formats.md) on top of the given
/// defaults. Unknown fields are rejected.
RunConfig load_run_config(const std::string& text, RunConfig base = {});
RunConfig load_run_config_file(const std::string& path, RunConfig base = {});

struct ScreenEntry {
  std::string screen;  // activity name
  std::array<double, features::kFeatureCount> feature_values{};
  ActivityType classified = ActivityType::Splash;
  std::optional<ActivityType> true_type;
  scenarios::ScenarioOutcome outcome;
};

struct CrashEntry {
  std::string screen;
  std::string message;
  std::int64_t at_ms = 0;   // virtual device time
  std::string source;       // "scenario" or "monkey"
};

struct TestReport {
  std::string package;
  std::string mode;  // "explore" or "monkey"
  std::uint64_t seed = 0;
  int events = 0;  // monkey only
  std::vector<ScreenEntry> screens;
  std::vector<scenarios::BugFinding> findings;  // logical findings only
  std::vector<CrashEntry> crashes;
  /// Simulated duration. Deterministic, unlike wall time, so structured
  /// reports are byte-identical across runs with equal seeds.
  std::int64_t duration_ms = 0;

  int logical_bug_count() const { return static_cast<int>(findings.size()); }
  int crash_count() const { return static_cast<int>(crashes.size()); }
};

/// The explore-classify-test pipeline: breadth-first discovery of the app's
/// screens, one classification and one type-dispatched scenario per screen.
/// Login screens are passed with the configured credentials. Crashes are
/// recorded and exploration continues on a restarted app.
TestReport explore_and_test(const sim::SimApp& app, const learn::KStarModel& model,
                            const RunConfig& config);

/// Seeded pseudo-random event stream (taps, swipes, long-presses, typed
/// text, back). Asserts nothing, so it reports zero logical findings by
/// construction; crashes restart the app and are recorded.
TestReport monkey_run(const sim::SimApp& app, const RunConfig& config);

/// Synthesizes a labeled dataset from the typed screens of the given apps:
/// per activity type, per_type_count instances rendered with seeded bound
/// jitter (within 5% of the screen height) and decorative elements added or
/// removed. Throws when some type has no source screen.
LabeledDataset build_dataset_from_apps(const std::vector<sim::SimApp>& apps,
                                       int per_type_count, std::uint64_t seed);

std::string generate_report_text(const TestReport& report);
std::string generate_report_json(const TestReport& report);
TestReport report_from_json(const std::string& text);

/// Command-line entry point; returns the process exit code
/// (0 success, 1 findings present, 2 usage or input errors).
int cli(int argc, char** argv);

}  // namespace appcheck::runner
