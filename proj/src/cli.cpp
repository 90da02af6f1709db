#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "appcheck/features.hpp"
#include "appcheck/runner.hpp"

namespace appcheck::runner {

namespace {

#ifndef APPCHECK_BUNDLED_APPS_DIR
#define APPCHECK_BUNDLED_APPS_DIR ""
#endif

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
}

std::vector<sim::SimApp> load_apps_dir(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) {
    throw std::runtime_error("no app definitions (*.json) found in " + dir);
  }
  std::vector<sim::SimApp> apps;
  apps.reserve(paths.size());
  for (const std::string& path : paths) apps.push_back(sim::SimApp::load_file(path));
  return apps;
}

scenarios::Credentials parse_credentials(const std::string& spec) {
  size_t colon = spec.find(':');
  if (colon == std::string::npos) {
    throw std::runtime_error("credentials must be given as user:password");
  }
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

void print_feature_vector(const features::FeatureVector& fv) {
  const auto& names = features::feature_names();
  for (int i = 0; i < features::kFeatureCount; ++i) {
    std::cout << names[i] << (i + 1 < features::kFeatureCount ? "," : "\n");
  }
  for (int i = 0; i < features::kFeatureCount; ++i) {
    std::cout << fv.values[i] << (i + 1 < features::kFeatureCount ? "," : "\n");
  }
}

learn::ClassifierFactory kstar_factory(double blend) {
  return [blend](const LabeledDataset& train) {
    auto model = std::make_shared<learn::KStarModel>(learn::kstar_train(train, blend));
    return learn::TrainedClassifier([model](std::span<const double> query) {
      return learn::kstar_predict(*model, query).label;
    });
  };
}

learn::KStarModel model_for_run(const std::string& model_path,
                                const std::string& dataset_path, double blend,
                                const std::string& apps_dir) {
  if (!model_path.empty()) return learn::read_model_file(model_path);
  if (!dataset_path.empty()) {
    return learn::kstar_train(read_dataset_file(dataset_path), blend);
  }
  // Fall back to the bundled apps: generate the standard dataset and train.
  std::vector<sim::SimApp> apps = load_apps_dir(apps_dir);
  return learn::kstar_train(build_dataset_from_apps(apps, 12, 7), blend);
}

}  // namespace

int cli(int argc, char** argv) {
  CLI::App app{"GUI-test workbench: screen classification and type-driven scenarios"};
  app.require_subcommand(1);

  std::string default_apps_dir = APPCHECK_BUNDLED_APPS_DIR;

  // --- extract ---------------------------------------------------------
  auto* extract_cmd =
      app.add_subcommand("extract", "Print the 15-feature vector of a UI dump");
  std::string extract_path;
  bool extract_xml = false;
  bool extract_native = false;
  std::string extract_lexicon;
  extract_cmd->add_option("dump", extract_path, "dump file")->required();
  extract_cmd->add_flag("--xml", extract_xml, "force uiautomator XML parsing");
  extract_cmd->add_flag("--native", extract_native, "force native snapshot parsing");
  extract_cmd->add_option("--lexicon", extract_lexicon, "lexicon config file");

  // --- dataset ---------------------------------------------------------
  auto* dataset_cmd = app.add_subcommand("dataset", "Dataset utilities");
  auto* dataset_build = dataset_cmd->add_subcommand(
      "build", "Generate a labeled dataset from the bundled app definitions");
  std::string dataset_out = "dataset.csv";
  std::string dataset_apps = default_apps_dir;
  int dataset_per_type = 12;
  std::uint64_t dataset_seed = 7;
  dataset_build->add_option("--out", dataset_out, "output CSV path");
  dataset_build->add_option("--apps", dataset_apps, "directory of app definitions");
  dataset_build->add_option("--per-type", dataset_per_type, "instances per type");
  dataset_build->add_option("--seed", dataset_seed, "generator seed");

  // --- train -----------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Store a classifier model");
  std::string train_dataset;
  std::string train_out = "model.json";
  double train_blend = 20.0;
  train_cmd->add_option("--dataset", train_dataset, "dataset CSV")->required();
  train_cmd->add_option("--out", train_out, "model output path");
  train_cmd->add_option("--blend", train_blend, "blend parameter in [0,100]");

  // --- eval ------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "Cross-validate a classifier");
  std::string eval_dataset;
  int eval_folds = 10;
  std::uint64_t eval_seed = 1;
  std::string eval_classifier = "kstar";
  double eval_blend = 20.0;
  int eval_k = 3;
  std::string eval_grid;
  eval_cmd->add_option("--dataset", eval_dataset, "dataset CSV")->required();
  eval_cmd->add_option("--folds", eval_folds, "fold count");
  eval_cmd->add_option("--seed", eval_seed, "fold shuffle seed");
  eval_cmd->add_option("--classifier", eval_classifier, "kstar | knn | majority");
  eval_cmd->add_option("--blend", eval_blend, "K* blend");
  eval_cmd->add_option("--k", eval_k, "k for knn");
  eval_cmd->add_option("--grid", eval_grid,
                       "comma-separated blends; prints the accuracy table");

  // --- rank ------------------------------------------------------------
  auto* rank_cmd = app.add_subcommand("rank", "Information-gain feature ranking");
  std::string rank_dataset;
  rank_cmd->add_option("--dataset", rank_dataset, "dataset CSV")->required();

  // --- run -------------------------------------------------------------
  auto* run_cmd =
      app.add_subcommand("run", "Explore an app, classify screens, run scenarios");
  std::string run_app;
  std::vector<std::string> run_faults;
  std::string run_model;
  std::string run_dataset;
  double run_blend = 20.0;
  std::string run_apps = default_apps_dir;
  std::string run_config_path;
  std::int64_t run_budget = 120000;
  std::uint64_t run_seed = 1;
  std::string run_credentials = "demo:hunter2";
  std::string run_lexicon;
  std::string run_report;
  std::string run_format = "text";
  bool run_exit_zero = false;
  run_cmd->add_option("app", run_app, "app definition file")->required();
  run_cmd->add_option("--fault", run_faults, "fault id to inject (repeatable)");
  run_cmd->add_option("--model", run_model, "trained model file");
  run_cmd->add_option("--dataset", run_dataset, "train from this dataset CSV");
  run_cmd->add_option("--blend", run_blend, "K* blend when training");
  run_cmd->add_option("--apps", run_apps, "bundled apps dir for the default model");
  run_cmd->add_option("--config", run_config_path, "run config file (JSON)");
  auto* run_budget_opt =
      run_cmd->add_option("--budget-ms", run_budget, "time budget in milliseconds");
  auto* run_seed_opt =
      run_cmd->add_option("--seed", run_seed, "seed for exploration and scenarios");
  auto* run_credentials_opt =
      run_cmd->add_option("--credentials", run_credentials, "user:password");
  auto* run_lexicon_opt =
      run_cmd->add_option("--lexicon", run_lexicon, "lexicon config file");
  run_cmd->add_option("--report", run_report, "write the structured report here");
  run_cmd->add_option("--format", run_format, "stdout format: text | json");
  run_cmd->add_flag("--exit-zero", run_exit_zero, "exit 0 even when findings exist");

  // --- monkey ----------------------------------------------------------
  auto* monkey_cmd = app.add_subcommand("monkey", "Random-event baseline run");
  std::string monkey_app;
  int monkey_events = 50000;
  std::uint64_t monkey_seed = 1;
  std::int64_t monkey_budget = 120000;
  std::vector<std::string> monkey_faults;
  std::string monkey_config_path;
  std::string monkey_report;
  std::string monkey_format = "text";
  bool monkey_exit_zero = false;
  monkey_cmd->add_option("app", monkey_app, "app definition file")->required();
  auto* monkey_events_opt = monkey_cmd->add_option("--events", monkey_events, "event count");
  auto* monkey_seed_opt =
      monkey_cmd->add_option("--seed", monkey_seed, "event stream seed");
  auto* monkey_budget_opt =
      monkey_cmd->add_option("--budget-ms", monkey_budget, "time budget in milliseconds");
  monkey_cmd->add_option("--fault", monkey_faults, "fault id to inject (repeatable)");
  monkey_cmd->add_option("--config", monkey_config_path, "run config file (JSON)");
  monkey_cmd->add_option("--report", monkey_report, "write the structured report here");
  monkey_cmd->add_option("--format", monkey_format, "stdout format: text | json");
  monkey_cmd->add_flag("--exit-zero", monkey_exit_zero, "exit 0 even when crashes exist");

  // --- report ----------------------------------------------------------
  auto* report_cmd = app.add_subcommand("report", "Render a stored structured report");
  std::string report_path;
  std::string report_format = "text";
  report_cmd->add_option("input", report_path, "structured report file")->required();
  report_cmd->add_option("--format", report_format, "text | json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& error) {
    return app.exit(error);
  } catch (const CLI::ParseError& error) {
    app.exit(error);
    return 2;
  }

  try {
    if (*extract_cmd) {
      std::string text = read_file(extract_path);
      if (extract_xml && extract_native) {
        throw std::runtime_error("--xml and --native are mutually exclusive");
      }
      bool use_native = extract_native ||
                        (!extract_xml && extract_path.ends_with(".json"));
      hierarchy::ScreenSnapshot snapshot =
          use_native ? hierarchy::parse_snapshot_native(text)
                     : hierarchy::parse_uiautomator_xml(text);
      lexicon::Lexicon lex = extract_lexicon.empty()
                                 ? lexicon::Lexicon::builtin()
                                 : lexicon::Lexicon::from_file(extract_lexicon);
      print_feature_vector(features::extract_features(snapshot, lex));
      return 0;
    }

    if (*dataset_build) {
      LabeledDataset dataset = build_dataset_from_apps(load_apps_dir(dataset_apps),
                                                       dataset_per_type, dataset_seed);
      write_dataset_file(dataset, dataset_out);
      std::cout << "wrote " << dataset.size() << " instances to " << dataset_out
                << "\n";
      return 0;
    }

    if (*train_cmd) {
      learn::KStarModel model =
          learn::kstar_train(read_dataset_file(train_dataset), train_blend);
      learn::write_model_file(model, train_out);
      std::cout << "stored " << model.training.size() << " instances (blend "
                << model.blend << ") in " << train_out << "\n";
      return 0;
    }

    if (*eval_cmd) {
      LabeledDataset dataset = read_dataset_file(eval_dataset);
      if (!eval_grid.empty()) {
        std::vector<double> candidates;
        std::stringstream stream(eval_grid);
        std::string part;
        while (std::getline(stream, part, ',')) candidates.push_back(std::stod(part));
        auto result =
            learn::grid_search_blend(dataset, candidates, eval_folds, eval_seed);
        std::cout << "blend,accuracy\n";
        for (const auto& [blend, accuracy] : result.accuracy_by_blend) {
          std::cout << blend << "," << accuracy << "\n";
        }
        std::cout << "best blend: " << result.best_blend << "\n";
        return 0;
      }
      learn::ClassifierFactory factory;
      if (eval_classifier == "kstar") {
        factory = kstar_factory(eval_blend);
      } else if (eval_classifier == "knn") {
        int k = eval_k;
        factory = [k](const LabeledDataset& train) {
          auto shared = std::make_shared<LabeledDataset>(train);
          return learn::TrainedClassifier([shared, k](std::span<const double> query) {
            return learn::knn_predict(*shared, query, k);
          });
        };
      } else if (eval_classifier == "majority") {
        factory = [](const LabeledDataset& train) {
          ActivityType label = learn::majority_predict(train);
          return learn::TrainedClassifier(
              [label](std::span<const double>) { return label; });
        };
      } else {
        throw std::runtime_error("unknown classifier \"" + eval_classifier + "\"");
      }
      double accuracy = learn::cross_validate(dataset, factory, eval_folds, eval_seed);
      std::cout << eval_classifier << " accuracy (" << eval_folds
                << "-fold, seed " << eval_seed << "): " << accuracy << "\n";
      return 0;
    }

    if (*rank_cmd) {
      LabeledDataset dataset = read_dataset_file(rank_dataset);
      learn::FeatureRanking ranking = learn::info_gain_rank(dataset);
      std::cout << "rank,feature,info_gain_bits\n";
      int rank = 0;
      for (const learn::RankedFeature& entry : ranking.entries) {
        std::cout << ++rank << "," << features::feature_names()[entry.feature_index]
                  << "," << entry.info_gain_bits << "\n";
      }
      return 0;
    }

    if (*run_cmd) {
      sim::SimApp sim_app = sim::SimApp::load_file(run_app);
      for (const std::string& fault : run_faults) sim_app.inject_fault(fault);
      RunConfig config;
      if (!run_config_path.empty()) {
        config = load_run_config_file(run_config_path, config);
      }
      // Explicit flags override the config file.
      if (run_budget_opt->count()) config.time_budget_ms = run_budget;
      if (run_seed_opt->count()) {
        config.explore_seed = run_seed;
        config.scenario_seed = run_seed;
      }
      if (run_credentials_opt->count() || run_config_path.empty()) {
        config.credentials = parse_credentials(run_credentials);
      }
      if (run_lexicon_opt->count()) config.lexicon_path = run_lexicon;
      learn::KStarModel model = model_for_run(
          !run_model.empty() ? run_model : config.model_path, run_dataset, run_blend,
          run_apps);
      TestReport report = explore_and_test(sim_app, model, config);
      std::string structured = generate_report_json(report);
      if (!run_report.empty()) write_file(run_report, structured);
      std::cout << (run_format == "json" ? structured : generate_report_text(report));
      bool findings = report.logical_bug_count() > 0 || report.crash_count() > 0;
      return findings && !run_exit_zero ? 1 : 0;
    }

    if (*monkey_cmd) {
      sim::SimApp sim_app = sim::SimApp::load_file(monkey_app);
      for (const std::string& fault : monkey_faults) sim_app.inject_fault(fault);
      RunConfig config;
      if (!monkey_config_path.empty()) {
        config = load_run_config_file(monkey_config_path, config);
      }
      if (monkey_budget_opt->count()) config.time_budget_ms = monkey_budget;
      if (monkey_seed_opt->count()) config.monkey_seed = monkey_seed;
      if (monkey_events_opt->count()) config.monkey_event_count = monkey_events;
      TestReport report = monkey_run(sim_app, config);
      std::string structured = generate_report_json(report);
      if (!monkey_report.empty()) write_file(monkey_report, structured);
      std::cout << (monkey_format == "json" ? structured
                                            : generate_report_text(report));
      return report.crash_count() > 0 && !monkey_exit_zero ? 1 : 0;
    }

    if (*report_cmd) {
      TestReport report = report_from_json(read_file(report_path));
      std::cout << (report_format == "json" ? generate_report_json(report)
                                            : generate_report_text(report));
      return 0;
    }
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace appcheck::runner
