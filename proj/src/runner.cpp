#include "appcheck/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <random>
#include <set>
#include <sstream>

#include "appcheck/features.hpp"

namespace appcheck::runner {

namespace {

using sim::DeviceAction;
using sim::Observation;
using sim::ObservationKind;
using sim::SimApp;
using sim::SimDevice;

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - start)
      .count();
}

int element_center_x(const hierarchy::UiElement& element) {
  return static_cast<int>(element.bounds.center_x());
}
int element_center_y(const hierarchy::UiElement& element) {
  return static_cast<int>(element.bounds.center_y());
}

const hierarchy::UiElement* first_role_element(const hierarchy::ScreenSnapshot& snap,
                                               const lexicon::Lexicon& lex,
                                               const std::string& role,
                                               features::ElementGroup group) {
  auto hits = lexicon::resolve(snap, lex, role, group);
  return hits.empty() ? nullptr : hits.front();
}

}  // namespace

void validate_config(const RunConfig& config) {
  if (config.time_budget_ms <= 0) {
    throw std::invalid_argument("time budget must be positive");
  }
  if (config.monkey_event_count <= 0) {
    throw std::invalid_argument("monkey event count must be positive");
  }
  const MonkeyMix& mix = config.monkey_mix;
  double sum = mix.tap + mix.swipe + mix.long_press + mix.text + mix.back;
  if (mix.tap < 0 || mix.swipe < 0 || mix.long_press < 0 || mix.text < 0 ||
      mix.back < 0 || std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("monkey mix weights must be non-negative and sum to 1");
  }
  if (config.splash_timeout_ms <= 0) {
    throw std::invalid_argument("splash timeout must be positive");
  }
}

// ---------------------------------------------------------------------------
// Explore-classify-test pipeline
// ---------------------------------------------------------------------------

TestReport explore_and_test(const SimApp& app, const learn::KStarModel& model,
                            const RunConfig& config) {
  validate_config(config);

  TestReport report;
  report.package = app.def().package;
  report.mode = "explore";
  report.seed = config.explore_seed;

  lexicon::Lexicon lexicon = config.lexicon_path.empty()
                                 ? lexicon::Lexicon::builtin()
                                 : lexicon::Lexicon::from_file(config.lexicon_path);
  scenarios::ScenarioConfig scenario_config;
  scenario_config.credentials = config.credentials;
  scenario_config.lexicon = &lexicon;
  scenario_config.seed = config.scenario_seed;
  scenario_config.splash_timeout_ms = config.splash_timeout_ms;

  std::map<std::string, ActivityType> truth;
  for (const auto& [_, screen] : app.def().screens) {
    truth[screen.activity_name] = screen.true_type;
  }

  auto wall_start = std::chrono::steady_clock::now();
  std::set<std::string> visited;
  std::deque<std::vector<DeviceAction>> routes;
  routes.push_back({});

  while (!routes.empty() && elapsed_ms(wall_start) < config.time_budget_ms) {
    std::vector<DeviceAction> route = std::move(routes.front());
    routes.pop_front();

    // Deterministic replay from a fresh launch; the device is a value type,
    // so a route is a complete address of one screen state.
    SimDevice device(app);
    bool dead = false;
    for (const DeviceAction& action : route) {
      Observation obs = device.step(action);
      if (obs.kind == ObservationKind::Crashed ||
          obs.kind == ObservationKind::AppExited) {
        dead = true;
        break;
      }
    }
    if (dead || !device.live()) continue;

    hierarchy::ScreenSnapshot snap = device.snapshot();
    const std::string& key = snap.activity_name;
    if (visited.count(key)) continue;
    visited.insert(key);

    features::FeatureVector fv = features::extract_features(snap, lexicon);
    learn::Prediction prediction = kstar_predict(model, fv.values);

    scenarios::ScenarioOutcome outcome =
        scenarios::run_scenario(prediction.label, device, scenario_config);
    for (const scenarios::BugFinding& finding : outcome.findings) {
      if (finding.severity == scenarios::Severity::Logical) {
        report.findings.push_back(finding);
      } else {
        report.crashes.push_back(
            {finding.screen_id, finding.description, device.clock_ms(), "scenario"});
      }
    }

    ScreenEntry entry;
    entry.screen = key;
    entry.feature_values = fv.values;
    entry.classified = prediction.label;
    if (auto it = truth.find(key); it != truth.end()) entry.true_type = it->second;
    entry.outcome = outcome;
    report.screens.push_back(std::move(entry));

    // Discover outgoing edges on clones; only edges that reach unvisited
    // screens extend the route queue.
    auto probe = [&](std::vector<DeviceAction> extra) {
      SimDevice clone = device;
      Observation obs;
      for (const DeviceAction& action : extra) {
        obs = clone.step(action);
        if (obs.kind == ObservationKind::Crashed) {
          report.crashes.push_back({key, "application crashed: " + obs.crash_message,
                                    clone.clock_ms(), "explore"});
          return;
        }
        if (obs.kind == ObservationKind::AppExited) return;
      }
      if (!clone.live()) return;
      std::string target = clone.current_activity();
      if (target == key || visited.count(target)) return;
      std::vector<DeviceAction> next = route;
      next.insert(next.end(), extra.begin(), extra.end());
      routes.push_back(std::move(next));
    };

    // A long wait lets timed splash screens advance.
    probe({DeviceAction::wait(config.splash_timeout_ms)});

    for (const hierarchy::UiElement* element : hierarchy::flatten(snap)) {
      if (!element->clickable) continue;
      probe({DeviceAction::tap_at(element_center_x(*element),
                                  element_center_y(*element))});
    }

    // Login screens are passed with the configured credentials.
    if (prediction.label == ActivityType::Login &&
        !config.credentials.username.empty()) {
      const auto* user = first_role_element(snap, lexicon, "username_field",
                                            features::ElementGroup::TextField);
      const auto* pass = first_role_element(snap, lexicon, "password_field",
                                            features::ElementGroup::TextField);
      const auto* submit = first_role_element(snap, lexicon, "login_submit",
                                              features::ElementGroup::Clickable);
      if (user && pass && submit) {
        probe({DeviceAction::tap_at(element_center_x(*user), element_center_y(*user)),
               DeviceAction::type_focused(config.credentials.username),
               DeviceAction::tap_at(element_center_x(*pass), element_center_y(*pass)),
               DeviceAction::type_focused(config.credentials.password),
               DeviceAction::tap_at(element_center_x(*submit),
                                    element_center_y(*submit))});
      }
    }

    report.duration_ms += device.clock_ms();
  }

  return report;
}

// ---------------------------------------------------------------------------
// Monkey baseline
// ---------------------------------------------------------------------------

TestReport monkey_run(const SimApp& app, const RunConfig& config) {
  validate_config(config);

  TestReport report;
  report.package = app.def().package;
  report.mode = "monkey";
  report.seed = config.monkey_seed;
  report.events = config.monkey_event_count;

  SimDevice device(app);
  std::mt19937_64 rng(config.monkey_seed);
  auto rand01 = [&rng]() {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
  };
  const MonkeyMix& mix = config.monkey_mix;
  auto wall_start = std::chrono::steady_clock::now();

  for (int event = 0; event < config.monkey_event_count; ++event) {
    if ((event & 255) == 0 && elapsed_ms(wall_start) >= config.time_budget_ms) break;

    std::string screen_before = device.live() ? device.current_activity() : "";
    double pick = rand01();
    DeviceAction action;
    if (pick < mix.tap) {
      int x = static_cast<int>(rng() % sim::kScreenWidth);
      int y = static_cast<int>(rng() % sim::kScreenHeight);
      action = DeviceAction::tap_at(x, y);
    } else if (pick < mix.tap + mix.swipe) {
      int x = static_cast<int>(rng() % sim::kScreenWidth);
      int y = static_cast<int>(rng() % sim::kScreenHeight);
      auto direction = static_cast<sim::SwipeDirection>(rng() % 4);
      action = DeviceAction::swipe_at(x, y, direction);
    } else if (pick < mix.tap + mix.swipe + mix.long_press) {
      int x = static_cast<int>(rng() % sim::kScreenWidth);
      int y = static_cast<int>(rng() % sim::kScreenHeight);
      action = DeviceAction::long_press_at(x, y);
    } else if (pick < mix.tap + mix.swipe + mix.long_press + mix.text) {
      int length = 1 + static_cast<int>(rng() % 12);
      std::string text;
      text.reserve(length);
      for (int i = 0; i < length; ++i) {
        text.push_back(static_cast<char>(32 + rng() % 95));  // printable ASCII
      }
      action = DeviceAction::type_focused(std::move(text));
    } else {
      action = DeviceAction::back();
    }

    Observation obs = device.step(action);
    if (obs.kind == ObservationKind::Crashed) {
      report.crashes.push_back(
          {screen_before, obs.crash_message, device.clock_ms(), "monkey"});
      device.restart();
    } else if (obs.kind == ObservationKind::AppExited) {
      device.restart();
    }
  }

  report.duration_ms = device.clock_ms();
  return report;
}

// ---------------------------------------------------------------------------
// Dataset generation
// ---------------------------------------------------------------------------

namespace {

struct DatasetRng {
  std::mt19937_64 rng;
  explicit DatasetRng(std::uint64_t seed) : rng(seed) {}
  int below(int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }
  bool coin() { return (rng() & 1) != 0; }
};

void jitter_children(sim::ElementTemplate& element, int max_shift, DatasetRng& rng) {
  auto& children = element.children;
  for (auto it = children.begin(); it != children.end();) {
    if (it->decor && rng.coin()) {
      it = children.erase(it);  // decorative element removed for this variant
      continue;
    }
    int dx = rng.below(2 * max_shift + 1) - max_shift;
    int dy = rng.below(2 * max_shift + 1) - max_shift;
    hierarchy::Rect& r = it->bounds;
    dx = std::clamp(dx, -r.x1, sim::kScreenWidth - r.x2);
    dy = std::clamp(dy, -r.y1, sim::kScreenHeight - r.y2);
    r.x1 += dx;
    r.x2 += dx;
    r.y1 += dy;
    r.y2 += dy;
    jitter_children(*it, max_shift, rng);
    ++it;
  }
}

}  // namespace

LabeledDataset build_dataset_from_apps(const std::vector<SimApp>& apps,
                                       int per_type_count, std::uint64_t seed) {
  if (per_type_count < 1) {
    throw std::invalid_argument("per_type_count must be at least 1");
  }

  struct Source {
    const sim::AppDef* app;
    const sim::ScreenDef* screen;
  };
  std::array<std::vector<Source>, kActivityTypeCount> sources;
  for (const SimApp& app : apps) {
    for (const auto& [_, screen] : app.def().screens) {
      if (!screen.in_dataset) continue;
      sources[static_cast<int>(screen.true_type)].push_back({&app.def(), &screen});
    }
  }
  for (ActivityType type : all_activity_types()) {
    if (sources[static_cast<int>(type)].empty()) {
      throw std::runtime_error("no dataset source screens for type " +
                               std::string(to_string(type)));
    }
  }

  const int max_shift = sim::kScreenHeight / 20;  // 5% of the screen height
  DatasetRng rng(seed);
  lexicon::Lexicon lexicon = lexicon::Lexicon::builtin();

  LabeledDataset dataset;
  dataset.instances.reserve(static_cast<size_t>(per_type_count) * kActivityTypeCount);
  for (ActivityType type : all_activity_types()) {
    const auto& pool = sources[static_cast<int>(type)];
    for (int i = 0; i < per_type_count; ++i) {
      const Source& source = pool[static_cast<size_t>(i) % pool.size()];
      sim::ScreenDef variant = *source.screen;
      jitter_children(variant.root, max_shift, rng);

      // A few synthetic filler views vary the total element count the way
      // decorations and ad banners do in real layouts.
      int fillers = rng.below(4);
      for (int f = 0; f < fillers; ++f) {
        sim::ElementTemplate filler;
        filler.id = "gen_filler_" + std::to_string(f);
        filler.widget_class = "android.widget.TextView";
        int w = 80 + rng.below(300);
        int h = 40 + rng.below(160);
        int x1 = rng.below(sim::kScreenWidth - w);
        int y1 = rng.below(sim::kScreenHeight - h);
        filler.bounds = {x1, y1, x1 + w, y1 + h};
        variant.root.children.push_back(std::move(filler));
      }

      hierarchy::ScreenSnapshot snapshot = sim::render_screen(*source.app, variant);
      features::FeatureVector fv = features::extract_features(snapshot, lexicon);
      Instance instance;
      instance.features = fv.values;
      instance.label = type;
      dataset.instances.push_back(instance);
    }
  }
  return dataset;
}

}  // namespace appcheck::runner
