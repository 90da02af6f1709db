#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "appcheck/runner.hpp"
#include "testsupport.hpp"

using namespace appcheck;
using runner::RunConfig;
using runner::TestReport;
using sim::SimApp;

namespace {

SimApp load_bundled(const std::string& name) {
  return SimApp::load_file(source_path("apps/" + name + ".json"));
}

std::vector<SimApp> bundled_apps() {
  std::vector<SimApp> apps;
  for (const char* name : {"crimetalk_replica", "k9replica", "kitchensink"}) {
    apps.push_back(load_bundled(name));
  }
  return apps;
}

learn::KStarModel standard_model() {
  return learn::kstar_train(runner::build_dataset_from_apps(bundled_apps(), 12, 7),
                            20.0);
}

int run_cli(std::vector<std::string> args, std::string* captured_out = nullptr) {
  std::vector<char*> argv;
  argv.reserve(args.size());
  for (std::string& arg : args) argv.push_back(arg.data());
  std::ostringstream captured;
  std::streambuf* previous = std::cout.rdbuf(captured.rdbuf());
  int code = runner::cli(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(previous);
  if (captured_out) *captured_out = captured.str();
  return code;
}

std::vector<std::string> finding_checks(const TestReport& report) {
  std::vector<std::string> checks;
  for (const auto& finding : report.findings) checks.push_back(finding.check_id);
  std::sort(checks.begin(), checks.end());
  return checks;
}

}  // namespace

TEST_CASE("run config validation") {
  RunConfig config;
  CHECK_NOTHROW(runner::validate_config(config));

  RunConfig bad_budget = config;
  bad_budget.time_budget_ms = 0;
  CHECK_THROWS_AS(runner::validate_config(bad_budget), std::invalid_argument);

  RunConfig bad_events = config;
  bad_events.monkey_event_count = 0;
  CHECK_THROWS_AS(runner::validate_config(bad_events), std::invalid_argument);

  RunConfig bad_mix = config;
  bad_mix.monkey_mix.tap = 0.7;  // weights no longer sum to 1
  CHECK_THROWS_AS(runner::validate_config(bad_mix), std::invalid_argument);
}

TEST_CASE("dataset generation covers all types deterministically") {
  std::vector<SimApp> apps = bundled_apps();
  LabeledDataset dataset = runner::build_dataset_from_apps(apps, 12, 7);
  CHECK(dataset.size() == 84);

  std::array<int, kActivityTypeCount> per_type{};
  for (const Instance& instance : dataset.instances) {
    per_type[static_cast<int>(instance.label)] += 1;
  }
  for (int count : per_type) CHECK(count == 12);

  // Same seed, same bytes; other seeds differ.
  LabeledDataset again = runner::build_dataset_from_apps(apps, 12, 7);
  CHECK(write_dataset_csv(again) == write_dataset_csv(dataset));
  CHECK(write_dataset_csv(runner::build_dataset_from_apps(apps, 12, 8)) !=
        write_dataset_csv(dataset));

  // The mail and portal apps alone cover five types; the error names the
  // first missing one (Browser).
  std::vector<SimApp> partial;
  partial.push_back(load_bundled("k9replica"));
  partial.push_back(load_bundled("crimetalk_replica"));
  CHECK_THROWS_WITH_AS(runner::build_dataset_from_apps(partial, 12, 7),
                       doctest::Contains("Browser"), std::runtime_error);

  CHECK_THROWS_AS(runner::build_dataset_from_apps(apps, 0, 7), std::invalid_argument);
}

TEST_CASE("exploring the clean mail app classifies every screen and finds nothing") {
  SimApp app = load_bundled("k9replica");
  learn::KStarModel model = standard_model();
  RunConfig config;
  TestReport report = runner::explore_and_test(app, model, config);

  CHECK(report.mode == "explore");
  CHECK(report.package == "org.k9replica.mail");
  CHECK(report.logical_bug_count() == 0);
  CHECK(report.crash_count() == 0);
  CHECK(report.screens.size() == 5);  // splash, inbox, view, compose, login

  for (const auto& entry : report.screens) {
    CAPTURE(entry.screen);
    REQUIRE(entry.true_type.has_value());
    CHECK(entry.classified == *entry.true_type);  // classification column
    CHECK(entry.outcome.checks_run >= 1);
  }
}

TEST_CASE("exploring a fully faulted app surfaces each planted bug exactly once") {
  SimApp app = load_bundled("k9replica");
  for (const char* id : {"ML-1", "ML-2", "ML-3", "ML-4", "LS-1", "LS-2", "LS-3"}) {
    app.inject_fault(id);
  }
  TestReport report = runner::explore_and_test(app, standard_model(), RunConfig{});
  CHECK(finding_checks(report) ==
        std::vector<std::string>{"login-empty-bypass", "login-invalid-bypass",
                                 "login-valid-rejected", "mail-open-stuck",
                                 "mail-send-empty-recipient",
                                 "mail-send-invalid-recipient",
                                 "mail-send-valid-stuck"});
  CHECK(report.crash_count() == 0);

  SimApp portal_app = load_bundled("crimetalk_replica");
  for (const char* id : {"PT-1", "PT-2", "PT-3"}) portal_app.inject_fault(id);
  TestReport portal_report =
      runner::explore_and_test(portal_app, standard_model(), RunConfig{});
  CHECK(finding_checks(portal_report) ==
        std::vector<std::string>{"portal-article-stuck", "portal-swipe-stuck",
                                 "portal-tabs-stuck"});

  // Aggregation check: the global findings list equals the per-screen lists.
  for (const TestReport* r : {&report, &portal_report}) {
    std::vector<std::string> per_screen;
    for (const auto& entry : r->screens) {
      for (const auto& finding : entry.outcome.findings) {
        per_screen.push_back(finding.check_id);
      }
    }
    std::sort(per_screen.begin(), per_screen.end());
    CHECK(per_screen == finding_checks(*r));
  }
}

TEST_CASE("exploration respects the wall-clock budget") {
  SimApp app = load_bundled("crimetalk_replica");
  RunConfig config;
  config.time_budget_ms = 1;  // essentially no budget
  TestReport report = runner::explore_and_test(app, standard_model(), config);
  CHECK(report.screens.size() <= app.def().screens.size());
}

TEST_CASE("exploration passes login screens with the configured credentials") {
  // A screen reachable only behind a valid sign-in. The login layout mirrors
  // the bundled one, so the standard model classifies it as Login and the
  // explorer applies the credentials.
  SimApp app = SimApp::load(R"({
    "package": "t.gated", "initial_screen": "login",
    "state": {},
    "screens": {
      "login": {
        "activity_name": "SignIn", "type": "Login",
        "root": {"id": "root", "class": "android.widget.FrameLayout",
                 "bounds": [0, 0, 1080, 1920],
                 "children": [
                   {"id": "headline", "class": "android.widget.TextView",
                    "text": "Welcome back", "bounds": [140, 300, 940, 400]},
                   {"id": "edit_username", "class": "android.widget.EditText",
                    "bounds": [140, 700, 940, 820]},
                   {"id": "edit_password", "class": "android.widget.EditText",
                    "bounds": [140, 860, 940, 980]},
                   {"id": "btn_login", "class": "android.widget.Button",
                    "clickable": true, "bounds": [140, 1040, 940, 1160]}
                 ]},
        "transitions": [
          {"on": {"action": "tap", "element": "btn_login"},
           "when": {"all": [{"reg_eq": ["edit_username", "demo"]},
                             {"reg_eq": ["edit_password", "hunter2"]}]},
           "do": {"goto": "vault"}},
          {"on": {"action": "tap", "element": "btn_login"}, "do": "noop"}
        ]
      },
      "vault": {
        "activity_name": "Vault", "type": "Portal",
        "root": {"id": "root2", "class": "android.widget.FrameLayout",
                 "bounds": [0, 0, 1080, 1920], "children": []},
        "transitions": [{"on": {"action": "back"}, "do": {"goto": "login"}}]
      }
    }
  })");
  TestReport report = runner::explore_and_test(app, standard_model(), RunConfig{});
  std::vector<std::string> screens;
  for (const auto& entry : report.screens) screens.push_back(entry.screen);
  std::sort(screens.begin(), screens.end());
  CHECK(screens == std::vector<std::string>{"SignIn", "Vault"});
}

TEST_CASE("a crash met during exploration is recorded and exploration continues") {
  SimApp app = SimApp::load(R"({
    "package": "t.crashy", "initial_screen": "main",
    "state": {},
    "screens": {
      "main": {
        "activity_name": "Main", "type": "Portal",
        "root": {"id": "root", "class": "android.widget.FrameLayout",
                 "bounds": [0, 0, 1080, 1920],
                 "children": [
                   {"id": "boom", "class": "android.widget.Button", "clickable": true,
                    "bounds": [100, 800, 400, 1000]},
                   {"id": "next", "class": "android.widget.Button", "clickable": true,
                    "bounds": [600, 800, 900, 1000]}
                 ]},
        "transitions": [
          {"on": {"action": "tap", "element": "boom"},
           "do": {"crash": "java.lang.RuntimeException: boom"}},
          {"on": {"action": "tap", "element": "next"}, "do": {"goto": "other"}}
        ]
      },
      "other": {
        "activity_name": "Other", "type": "Portal",
        "root": {"id": "root2", "class": "android.widget.FrameLayout",
                 "bounds": [0, 0, 1080, 1920], "children": []},
        "transitions": []
      }
    }
  })");
  TestReport report = runner::explore_and_test(app, standard_model(), RunConfig{});
  CHECK(report.crash_count() >= 1);
  CHECK(report.screens.size() == 2);  // the crash did not stop discovery
}

TEST_CASE("monkey runs are deterministic, crash-revealing, and assert nothing") {
  SimApp k9 = load_bundled("k9replica");
  RunConfig config;
  config.monkey_seed = 2;
  config.monkey_event_count = 2000;

  TestReport first = runner::monkey_run(k9, config);
  TestReport second = runner::monkey_run(k9, config);
  CHECK(runner::generate_report_json(first) == runner::generate_report_json(second));

  CHECK(first.mode == "monkey");
  CHECK(first.logical_bug_count() == 0);  // by construction
  CHECK(first.crash_count() >= 1);        // seed 2 reaches the long-press crash
  for (const auto& crash : first.crashes) {
    CHECK(crash.source == "monkey");
    CHECK(crash.message.find("NullPointerException") != std::string::npos);
    CHECK(crash.screen == "MessageList");
  }

  RunConfig other_seed = config;
  other_seed.monkey_seed = 3;
  CHECK(runner::generate_report_json(runner::monkey_run(k9, other_seed)) !=
        runner::generate_report_json(first));

  // An app without crash rules never crashes under the monkey.
  TestReport quiet = runner::monkey_run(load_bundled("kitchensink"), config);
  CHECK(quiet.crash_count() == 0);
  CHECK(quiet.logical_bug_count() == 0);
}

TEST_CASE("reports serialize deterministically and round-trip") {
  SimApp app = load_bundled("k9replica");
  app.inject_fault("LS-1");
  TestReport report = runner::explore_and_test(app, standard_model(), RunConfig{});
  REQUIRE(report.logical_bug_count() == 1);

  std::string json_text = runner::generate_report_json(report);
  TestReport reread = runner::report_from_json(json_text);
  CHECK(runner::generate_report_json(reread) == json_text);

  std::string text = runner::generate_report_text(report);
  CHECK(text.find("summary: 1 logical bugs, 0 crashes") != std::string::npos);
  CHECK(text.find("login-empty-bypass") != std::string::npos);
  CHECK(text.find("AccountSetupBasics") != std::string::npos);

  // Counts in the structured form agree with the lists.
  CHECK(json_text.find("\"logical_bugs\": 1") != std::string::npos);
  CHECK(json_text.find("\"crashes\": 0") != std::string::npos);
}

TEST_CASE("an empty report renders the zero summary") {
  TestReport report;
  report.package = "x";
  report.mode = "explore";
  std::string text = runner::generate_report_text(report);
  CHECK(text.find("0 logical bugs, 0 crashes") != std::string::npos);
}

TEST_CASE("cli: extract prints the feature header and golden vector") {
  std::string out;
  int code = run_cli({"appcheck", "extract", source_path("fixtures/login.xml")}, &out);
  CHECK(code == 0);
  CHECK(out.find("clickable_top,clickable_middle") != std::string::npos);
  CHECK(out.find("0,1,1,0,0,0,0,0,0,0,2,0,9,0,0") != std::string::npos);

  std::string native_out;
  code = run_cli(
      {"appcheck", "extract", source_path("fixtures/login_native.json"), "--native"},
      &native_out);
  CHECK(code == 0);
  CHECK(native_out == out);
}

TEST_CASE("cli: dataset build, train, eval and rank cooperate") {
  std::string dataset_path = "/tmp/appcheck_test_dataset.csv";
  std::string model_path = "/tmp/appcheck_test_model.json";
  std::string out;

  CHECK(run_cli({"appcheck", "dataset", "build", "--apps", source_path("apps"),
                 "--out", dataset_path, "--per-type", "12", "--seed", "7"},
                &out) == 0);
  CHECK(out.find("84 instances") != std::string::npos);

  CHECK(run_cli({"appcheck", "train", "--dataset", dataset_path, "--blend", "20",
                 "--out", model_path},
                &out) == 0);

  CHECK(run_cli({"appcheck", "eval", "--dataset", dataset_path, "--folds", "10",
                 "--seed", "1"},
                &out) == 0);
  CHECK(out.find("kstar accuracy") != std::string::npos);

  // folds < 2 is a usage error: exit code 2.
  CHECK(run_cli({"appcheck", "eval", "--dataset", dataset_path, "--folds", "1"},
                &out) == 2);

  CHECK(run_cli({"appcheck", "rank", "--dataset", dataset_path}, &out) == 0);
  CHECK(out.find("rank,feature,info_gain_bits") != std::string::npos);
  CHECK(out.find("element_count") != std::string::npos);

  std::remove(dataset_path.c_str());
  std::remove(model_path.c_str());
}

TEST_CASE("run config files merge under explicit flags") {
  RunConfig config = runner::load_run_config(R"({
    "schema_version": 1,
    "budget_ms": 45000,
    "credentials": {"username": "qa", "password": "secret"},
    "monkey_events": 1234,
    "scenario_seed": 9,
    "monkey_mix": {"tap": 0.5, "swipe": 0.2, "long_press": 0.1,
                    "text": 0.1, "back": 0.1}
  })");
  CHECK(config.time_budget_ms == 45000);
  CHECK(config.credentials.username == "qa");
  CHECK(config.monkey_event_count == 1234);
  CHECK(config.scenario_seed == 9);
  CHECK(config.monkey_mix.tap == 0.5);

  CHECK_THROWS_WITH_AS(runner::load_run_config(R"({"budget": 1})"),
                       doctest::Contains("unknown field"), std::runtime_error);
  // Mix weights from a config file still have to sum to 1.
  CHECK_THROWS_AS(runner::load_run_config(
                      R"({"monkey_mix": {"tap": 0.9, "swipe": 0.2, "long_press": 0.1,
                          "text": 0.1, "back": 0.1}})"),
                  std::invalid_argument);
}

TEST_CASE("cli: grid evaluation prints the per-blend accuracy table") {
  std::string dataset_path = "/tmp/appcheck_grid_dataset.csv";
  write_dataset_file(runner::build_dataset_from_apps(bundled_apps(), 12, 7),
                     dataset_path);
  std::string out;
  CHECK(run_cli({"appcheck", "eval", "--dataset", dataset_path, "--folds", "10",
                 "--seed", "1", "--grid", "0,20,40,60,80,100"},
                &out) == 0);
  CHECK(out.find("blend,accuracy") != std::string::npos);
  CHECK(std::count(out.begin(), out.end(), '\n') >= 8);  // 6 rows + header + best
  CHECK(out.find("best blend:") != std::string::npos);
  std::remove(dataset_path.c_str());
}

TEST_CASE("cli: run exit codes distinguish findings from success and usage errors") {
  std::string out;
  std::string app_path = source_path("apps/k9replica.json");
  std::string apps_dir = source_path("apps");

  CHECK(run_cli({"appcheck", "run", app_path, "--apps", apps_dir}, &out) == 0);

  CHECK(run_cli({"appcheck", "run", app_path, "--apps", apps_dir, "--fault", "LS-1"},
                &out) == 1);
  CHECK(out.find("login-empty-bypass") != std::string::npos);

  CHECK(run_cli({"appcheck", "run", app_path, "--apps", apps_dir, "--fault", "LS-1",
                 "--exit-zero"},
                &out) == 0);

  CHECK(run_cli({"appcheck", "run", app_path, "--apps", apps_dir, "--fault", "NO-SUCH"},
                &out) == 2);

  CHECK(run_cli({"appcheck", "--bogus-flag"}, &out) == 2);
  CHECK(run_cli({"appcheck", "run"}, &out) == 2);  // missing app argument
}

TEST_CASE("cli: monkey and report subcommands") {
  std::string out;
  std::string app_path = source_path("apps/k9replica.json");
  std::string report_path = "/tmp/appcheck_test_monkey.json";

  int code = run_cli({"appcheck", "monkey", app_path, "--events", "2000", "--seed",
                      "2", "--report", report_path},
                     &out);
  CHECK(code == 1);  // the crash makes the exit code non-zero
  CHECK(out.find("summary: 0 logical bugs,") != std::string::npos);

  std::string rendered;
  CHECK(run_cli({"appcheck", "report", report_path}, &rendered) == 0);
  CHECK(rendered == out);

  std::string as_json;
  CHECK(run_cli({"appcheck", "report", report_path, "--format", "json"}, &as_json) == 0);
  CHECK(as_json == read_text_file(report_path));

  // The same run driven through a config file, with the flag overriding the
  // file's seed, reproduces the flag-driven report.
  std::string config_path = "/tmp/appcheck_test_runcfg.json";
  {
    std::ofstream cfg(config_path);
    cfg << R"({"monkey_events": 2000, "monkey_seed": 77})";
  }
  std::string via_config;
  CHECK(run_cli({"appcheck", "monkey", app_path, "--config", config_path, "--seed",
                 "2", "--report", report_path},
                &via_config) == 1);
  CHECK(via_config == out);

  std::remove(report_path.c_str());
  std::remove(config_path.c_str());
}
