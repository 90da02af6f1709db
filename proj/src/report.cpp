#include <fstream>
#include <sstream>

#include "appcheck/runner.hpp"
#include "json.hpp"

namespace appcheck::runner {

namespace {

using nlohmann::json;

json finding_to_json(const scenarios::BugFinding& finding) {
  json node;
  node["screen"] = finding.screen_id;
  node["classified_type"] = std::string(to_string(finding.classified_type));
  node["check_id"] = finding.check_id;
  node["description"] = finding.description;
  node["severity"] = std::string(scenarios::to_string(finding.severity));
  return node;
}

scenarios::BugFinding finding_from_json(const json& node) {
  scenarios::BugFinding finding;
  finding.screen_id = node.at("screen").get<std::string>();
  finding.classified_type =
      activity_type_from_string(node.at("classified_type").get<std::string>())
          .value_or(ActivityType::Splash);
  finding.check_id = node.at("check_id").get<std::string>();
  finding.description = node.at("description").get<std::string>();
  finding.severity = node.at("severity").get<std::string>() == "crash"
                         ? scenarios::Severity::Crash
                         : scenarios::Severity::Logical;
  return finding;
}

}  // namespace

std::string generate_report_json(const TestReport& report) {
  json document;
  document["schema_version"] = 1;
  document["package"] = report.package;
  document["mode"] = report.mode;
  document["seed"] = report.seed;
  document["events"] = report.events;
  document["duration_ms"] = report.duration_ms;
  document["counts"] = {{"logical_bugs", report.logical_bug_count()},
                        {"crashes", report.crash_count()}};

  json screens = json::array();
  for (const ScreenEntry& entry : report.screens) {
    json node;
    node["screen"] = entry.screen;
    node["features"] = entry.feature_values;
    node["classified"] = std::string(to_string(entry.classified));
    node["true_type"] = entry.true_type
                            ? json(std::string(to_string(*entry.true_type)))
                            : json(nullptr);
    node["checks_run"] = entry.outcome.checks_run;
    json findings = json::array();
    for (const auto& finding : entry.outcome.findings) {
      findings.push_back(finding_to_json(finding));
    }
    node["findings"] = std::move(findings);
    json inconclusive = json::array();
    for (const auto& item : entry.outcome.inconclusive) {
      inconclusive.push_back({{"check_id", item.check_id}, {"reason", item.reason}});
    }
    node["inconclusive"] = std::move(inconclusive);
    screens.push_back(std::move(node));
  }
  document["screens"] = std::move(screens);

  json findings = json::array();
  for (const auto& finding : report.findings) {
    findings.push_back(finding_to_json(finding));
  }
  document["findings"] = std::move(findings);

  json crashes = json::array();
  for (const CrashEntry& crash : report.crashes) {
    crashes.push_back({{"screen", crash.screen},
                       {"message", crash.message},
                       {"at_ms", crash.at_ms},
                       {"source", crash.source}});
  }
  document["crashes"] = std::move(crashes);

  return document.dump(2) + "\n";
}

TestReport report_from_json(const std::string& text) {
  json document;
  try {
    document = json::parse(text);
  } catch (const json::parse_error& error) {
    throw std::runtime_error(std::string("report is not valid JSON: ") + error.what());
  }

  TestReport report;
  report.package = document.at("package").get<std::string>();
  report.mode = document.at("mode").get<std::string>();
  report.seed = document.at("seed").get<std::uint64_t>();
  report.events = document.at("events").get<int>();
  report.duration_ms = document.at("duration_ms").get<std::int64_t>();

  for (const json& node : document.at("screens")) {
    ScreenEntry entry;
    entry.screen = node.at("screen").get<std::string>();
    const json& feature_values = node.at("features");
    for (int i = 0; i < features::kFeatureCount; ++i) {
      entry.feature_values[i] = feature_values.at(i).get<double>();
    }
    entry.classified =
        activity_type_from_string(node.at("classified").get<std::string>())
            .value_or(ActivityType::Splash);
    if (!node.at("true_type").is_null()) {
      entry.true_type =
          activity_type_from_string(node.at("true_type").get<std::string>());
    }
    entry.outcome.checks_run = node.at("checks_run").get<int>();
    for (const json& finding : node.at("findings")) {
      entry.outcome.findings.push_back(finding_from_json(finding));
    }
    for (const json& item : node.at("inconclusive")) {
      entry.outcome.inconclusive.push_back({item.at("check_id").get<std::string>(),
                                            item.at("reason").get<std::string>()});
    }
    report.screens.push_back(std::move(entry));
  }
  for (const json& finding : document.at("findings")) {
    report.findings.push_back(finding_from_json(finding));
  }
  for (const json& crash : document.at("crashes")) {
    report.crashes.push_back({crash.at("screen").get<std::string>(),
                              crash.at("message").get<std::string>(),
                              crash.at("at_ms").get<std::int64_t>(),
                              crash.at("source").get<std::string>()});
  }
  return report;
}

RunConfig load_run_config(const std::string& text, RunConfig base) {
  json document;
  try {
    document = json::parse(text);
  } catch (const json::parse_error& error) {
    throw std::runtime_error(std::string("run config is not valid JSON: ") +
                             error.what());
  }
  if (!document.is_object()) {
    throw std::runtime_error("run config: expected a JSON object");
  }

  for (auto it = document.begin(); it != document.end(); ++it) {
    const std::string& key = it.key();
    const json& value = it.value();
    if (key == "schema_version") {
      continue;
    } else if (key == "budget_ms") {
      base.time_budget_ms = value.get<std::int64_t>();
    } else if (key == "model") {
      base.model_path = value.get<std::string>();
    } else if (key == "lexicon") {
      base.lexicon_path = value.get<std::string>();
    } else if (key == "credentials") {
      base.credentials.username = value.at("username").get<std::string>();
      base.credentials.password = value.at("password").get<std::string>();
    } else if (key == "explore_seed") {
      base.explore_seed = value.get<std::uint64_t>();
    } else if (key == "monkey_seed") {
      base.monkey_seed = value.get<std::uint64_t>();
    } else if (key == "scenario_seed") {
      base.scenario_seed = value.get<std::uint64_t>();
    } else if (key == "monkey_events") {
      base.monkey_event_count = value.get<int>();
    } else if (key == "monkey_mix") {
      base.monkey_mix.tap = value.at("tap").get<double>();
      base.monkey_mix.swipe = value.at("swipe").get<double>();
      base.monkey_mix.long_press = value.at("long_press").get<double>();
      base.monkey_mix.text = value.at("text").get<double>();
      base.monkey_mix.back = value.at("back").get<double>();
    } else if (key == "splash_timeout_ms") {
      base.splash_timeout_ms = value.get<int>();
    } else {
      throw std::runtime_error("run config: unknown field \"" + key + "\"");
    }
  }
  validate_config(base);
  return base;
}

RunConfig load_run_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open run config: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_run_config(buffer.str(), std::move(base));
}

std::string generate_report_text(const TestReport& report) {
  std::ostringstream out;
  out << "=== test report: " << report.package << " (" << report.mode << ") ===\n";
  out << "seed: " << report.seed;
  if (report.mode == "monkey") out << ", events: " << report.events;
  out << ", simulated time: " << report.duration_ms << " ms\n";

  if (!report.screens.empty()) {
    out << "\nscreens visited: " << report.screens.size() << "\n";
    for (const ScreenEntry& entry : report.screens) {
      out << "  " << entry.screen << ": classified=" << to_string(entry.classified);
      if (entry.true_type) out << " true=" << to_string(*entry.true_type);
      out << " checks=" << entry.outcome.checks_run
          << " findings=" << entry.outcome.findings.size()
          << " inconclusive=" << entry.outcome.inconclusive.size() << "\n";
    }
  }

  if (!report.findings.empty()) {
    out << "\ndiscovered bugs:\n";
    int index = 0;
    for (const auto& finding : report.findings) {
      out << "  [" << ++index << "] screen=" << finding.screen_id
          << " type=" << to_string(finding.classified_type)
          << " check=" << finding.check_id
          << " severity=" << scenarios::to_string(finding.severity) << "\n"
          << "      " << finding.description << "\n";
    }
  }
  if (!report.crashes.empty()) {
    out << "\ncrashes:\n";
    int index = 0;
    for (const CrashEntry& crash : report.crashes) {
      out << "  [" << ++index << "] screen=" << crash.screen
          << " source=" << crash.source << " at=" << crash.at_ms << " ms\n"
          << "      " << crash.message << "\n";
    }
  }

  out << "\nsummary: " << report.logical_bug_count() << " logical bugs, "
      << report.crash_count() << " crashes\n";
  return out.str();
}

}  // namespace appcheck::runner
