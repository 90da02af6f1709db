#include "appcheck/scenarios.hpp"

#include <algorithm>

#include "appcheck/features.hpp"

namespace appcheck::scenarios {

namespace {

using hierarchy::ScreenSnapshot;
using hierarchy::UiElement;
using sim::DeviceAction;
using sim::Observation;
using sim::ObservationKind;
using sim::SimDevice;
using sim::SwipeDirection;

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

const lexicon::Lexicon& effective_lexicon(const ScenarioConfig& config) {
  static const lexicon::Lexicon fallback = lexicon::Lexicon::builtin();
  return config.lexicon ? *config.lexicon : fallback;
}

// Bookkeeping for one scenario invocation. Every device step goes through
// here so crashes are uniformly recorded and abort the scenario.
struct Ctx {
  const ScenarioConfig& config;
  const lexicon::Lexicon& lex;
  ScenarioOutcome out;
  bool aborted = false;
  std::string current_check;

  explicit Ctx(const ScenarioConfig& config_)
      : config(config_), lex(effective_lexicon(config_)) {}

  void begin_check(const std::string& check) {
    current_check = check;
    out.checks_run += 1;
  }

  void finding(const std::string& check, const std::string& description) {
    out.findings.push_back(
        {"", ActivityType::Splash, check, description, Severity::Logical});
  }

  void inconclusive(const std::string& check, const std::string& reason) {
    out.inconclusive.push_back({check, reason});
  }

  Observation step(SimDevice& device, const DeviceAction& action) {
    Observation obs = device.step(action);
    if (obs.kind == ObservationKind::Crashed) {
      out.findings.push_back({"",
                              ActivityType::Splash,
                              current_check,
                              "application crashed: " + obs.crash_message,
                              Severity::Crash});
      aborted = true;
    }
    return obs;
  }

  Observation tap(SimDevice& device, const UiElement& element) {
    return step(device, DeviceAction::tap_at(
                            static_cast<int>(element.bounds.center_x()),
                            static_cast<int>(element.bounds.center_y())));
  }

  Observation swipe(SimDevice& device, const UiElement& element,
                    SwipeDirection direction) {
    return step(device, DeviceAction::swipe_at(
                            static_cast<int>(element.bounds.center_x()),
                            static_cast<int>(element.bounds.center_y()), direction));
  }

  Observation type_into(SimDevice& device, const UiElement& element,
                        const std::string& text) {
    Observation obs = tap(device, element);
    if (aborted) return obs;
    return step(device, DeviceAction::type_focused(text));
  }
};

const UiElement* first_of_role(const ScreenSnapshot& snapshot,
                               const lexicon::Lexicon& lex, const std::string& role,
                               features::ElementGroup group) {
  auto hits = lexicon::resolve(snapshot, lex, role, group);
  return hits.empty() ? nullptr : hits.front();
}

std::vector<const UiElement*> elements_in_group(const ScreenSnapshot& snapshot,
                                                features::ElementGroup group) {
  std::vector<const UiElement*> out;
  for (const UiElement* element : hierarchy::flatten(snapshot)) {
    if (features::classify_element_groups(*element).contains(group)) {
      out.push_back(element);
    }
  }
  return out;
}

std::vector<const UiElement*> clickable_elements(const ScreenSnapshot& snapshot) {
  return elements_in_group(snapshot, features::ElementGroup::Clickable);
}

std::vector<const UiElement*> clickable_descendants(const UiElement& element) {
  std::vector<const UiElement*> out;
  for (const UiElement* node : hierarchy::flatten(element)) {
    if (node != &element && node->clickable) out.push_back(node);
  }
  return out;
}

/// True when some non-editable element's text contains the needle. Editable
/// fields display the typed text itself, so they don't count as evidence.
bool visible_text_contains(const ScreenSnapshot& snapshot, const std::string& needle) {
  for (const UiElement* element : hierarchy::flatten(snapshot)) {
    if (element->editable) continue;
    if (element->text.find(needle) != std::string::npos) return true;
  }
  return false;
}

bool rendering_changed(const Observation& obs) {
  return obs.kind == ObservationKind::ScreenChanged;
}

bool activity_changed(const Observation& obs, const std::string& start_activity) {
  return obs.kind == ObservationKind::ScreenChanged &&
         obs.snapshot.activity_name != start_activity;
}

}  // namespace

std::string_view to_string(Severity severity) {
  return severity == Severity::Logical ? "logical" : "crash";
}

std::string random_alnum(std::uint64_t seed, std::uint64_t salt, int length) {
  static const char charset[] =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  std::uint64_t state = seed ^ (salt * 0xD6E8FEB86659FD93ull);
  std::string out;
  out.reserve(length);
  for (int i = 0; i < length; ++i) {
    out.push_back(charset[splitmix64(state) % 62]);
  }
  return out;
}

// ---------------------------------------------------------------------------

ScenarioOutcome splash_scenario(const SimDevice& device, const ScenarioConfig& config) {
  Ctx ctx(config);
  ctx.begin_check("splash-stuck");
  ScreenSnapshot snap = device.snapshot();
  std::string start = snap.activity_name;

  auto clickables = clickable_elements(snap);
  if (clickables.size() > 1) {
    ctx.inconclusive("splash-stuck",
                     "screen offers several actions; it does not look like a splash");
    return ctx.out;
  }

  SimDevice dev = device;
  std::int64_t waited = 0;
  const std::int64_t step_ms = 500;
  while (waited < config.splash_timeout_ms) {
    Observation obs = ctx.step(dev, DeviceAction::wait(step_ms));
    if (ctx.aborted) return ctx.out;
    waited += step_ms;
    if (obs.kind == ObservationKind::AppExited) {
      ctx.inconclusive("splash-stuck", "the app exited while waiting");
      return ctx.out;
    }
    if (activity_changed(obs, start)) return ctx.out;  // advanced, no finding
  }

  if (clickables.size() == 1) {
    // No timer fired; a single enabled action may be the intended way out.
    Observation obs = ctx.tap(dev, *clickables.front());
    if (ctx.aborted) return ctx.out;
    if (activity_changed(obs, start)) return ctx.out;
  }
  ctx.finding("splash-stuck", "the splash screen never advanced to the next screen");
  return ctx.out;
}

ScenarioOutcome ad_scenario(const SimDevice& device, const ScenarioConfig& config) {
  Ctx ctx(config);
  ScreenSnapshot snap = device.snapshot();
  std::string start = snap.activity_name;

  ctx.begin_check("ad-unclosable");
  ctx.begin_check("ad-escapes-app");

  const UiElement* close = first_of_role(snap, ctx.lex, "close",
                                         features::ElementGroup::Clickable);
  if (close == nullptr) {
    ctx.finding("ad-unclosable", "no close control found on the advertisement");
    ctx.inconclusive("ad-escapes-app", "the advertisement could not be closed");
    return ctx.out;
  }

  SimDevice dev = device;
  ctx.current_check = "ad-unclosable";
  Observation obs = ctx.tap(dev, *close);
  if (ctx.aborted) return ctx.out;

  if (obs.kind == ObservationKind::AppExited) {
    ctx.finding("ad-escapes-app",
                "closing the advertisement left the application entirely");
    return ctx.out;
  }
  if (!activity_changed(obs, start)) {
    ctx.finding("ad-unclosable",
                "the advertisement persists after tapping its close control");
    return ctx.out;
  }
  if (obs.snapshot.foreground_package != snap.foreground_package) {
    ctx.finding("ad-escapes-app",
                "closing the advertisement changed the foreground package");
  }
  return ctx.out;
}

ScenarioOutcome login_scenario(const SimDevice& device, const ScenarioConfig& config) {
  Ctx ctx(config);
  ScreenSnapshot snap = device.snapshot();
  std::string start = snap.activity_name;

  const UiElement* user = first_of_role(snap, ctx.lex, "username_field",
                                        features::ElementGroup::TextField);
  const UiElement* pass = first_of_role(snap, ctx.lex, "password_field",
                                        features::ElementGroup::TextField);
  const UiElement* submit = first_of_role(snap, ctx.lex, "login_submit",
                                          features::ElementGroup::Clickable);

  const char* checks[] = {"login-empty-bypass", "login-invalid-bypass",
                          "login-valid-rejected"};
  if (user == nullptr || pass == nullptr || submit == nullptr) {
    for (const char* check : checks) {
      ctx.begin_check(check);
      ctx.inconclusive(check, "login form elements were not resolved");
    }
    return ctx.out;
  }

  {
    ctx.begin_check("login-empty-bypass");
    SimDevice dev = device;
    Observation obs = ctx.tap(dev, *submit);
    if (ctx.aborted) return ctx.out;
    if (activity_changed(obs, start)) {
      ctx.finding("login-empty-bypass",
                  "submitting with empty credentials advanced past the login screen");
    }
  }
  {
    ctx.begin_check("login-invalid-bypass");
    SimDevice dev = device;
    ctx.type_into(dev, *user, random_alnum(config.seed, 1));
    if (ctx.aborted) return ctx.out;
    ctx.type_into(dev, *pass, random_alnum(config.seed, 2));
    if (ctx.aborted) return ctx.out;
    Observation obs = ctx.tap(dev, *submit);
    if (ctx.aborted) return ctx.out;
    if (activity_changed(obs, start)) {
      ctx.finding("login-invalid-bypass",
                  "random invalid credentials advanced past the login screen");
    }
  }
  {
    ctx.begin_check("login-valid-rejected");
    if (config.credentials.username.empty() || config.credentials.password.empty()) {
      ctx.inconclusive("login-valid-rejected", "no valid credentials configured");
      return ctx.out;
    }
    SimDevice dev = device;
    ctx.type_into(dev, *user, config.credentials.username);
    if (ctx.aborted) return ctx.out;
    ctx.type_into(dev, *pass, config.credentials.password);
    if (ctx.aborted) return ctx.out;
    Observation obs = ctx.tap(dev, *submit);
    if (ctx.aborted) return ctx.out;
    if (!activity_changed(obs, start)) {
      ctx.finding("login-valid-rejected",
                  "valid credentials did not advance past the login screen");
    }
  }
  return ctx.out;
}

ScenarioOutcome portal_scenario(const SimDevice& device, const ScenarioConfig& config) {
  Ctx ctx(config);
  ScreenSnapshot snap = device.snapshot();
  std::string start = snap.activity_name;

  {
    ctx.begin_check("portal-swipe-stuck");
    auto pagers =
        elements_in_group(snap, features::ElementGroup::HorizontalSwipeable);
    if (pagers.empty()) {
      ctx.inconclusive("portal-swipe-stuck", "no horizontally swipeable element");
    } else {
      SimDevice dev = device;
      Observation left = ctx.swipe(dev, *pagers.front(), SwipeDirection::Left);
      if (ctx.aborted) return ctx.out;
      if (!rendering_changed(left)) {
        Observation right = ctx.swipe(dev, *pagers.front(), SwipeDirection::Right);
        if (ctx.aborted) return ctx.out;
        if (!rendering_changed(right)) {
          ctx.finding("portal-swipe-stuck",
                      "swiping left and right does not reach another section");
        }
      }
    }
  }
  {
    ctx.begin_check("portal-tabs-stuck");
    auto tabs = lexicon::resolve(snap, ctx.lex, "tab_item",
                                 features::ElementGroup::Clickable);
    if (tabs.empty()) {
      ctx.inconclusive("portal-tabs-stuck", "no tab elements resolved");
    } else {
      SimDevice dev = device;
      bool changed = false;
      for (const UiElement* tab : tabs) {
        Observation obs = ctx.tap(dev, *tab);
        if (ctx.aborted) return ctx.out;
        if (rendering_changed(obs)) {
          changed = true;
          break;
        }
      }
      if (!changed) {
        ctx.finding("portal-tabs-stuck",
                    "tapping the menu tabs does not reach another section");
      }
    }
  }
  {
    ctx.begin_check("portal-article-stuck");
    auto articles = lexicon::resolve(snap, ctx.lex, "article_item",
                                     features::ElementGroup::Clickable);
    if (articles.empty()) {
      ctx.inconclusive("portal-article-stuck", "no article elements resolved");
    } else {
      SimDevice dev = device;
      Observation obs = ctx.tap(dev, *articles.front());
      if (ctx.aborted) return ctx.out;
      if (!activity_changed(obs, start)) {
        ctx.finding("portal-article-stuck",
                    "tapping an article does not open it");
      }
    }
  }
  return ctx.out;
}

ScenarioOutcome mail_scenario(const SimDevice& device, const ScenarioConfig& config) {
  Ctx ctx(config);
  ScreenSnapshot snap = device.snapshot();
  std::string start = snap.activity_name;

  // Inbox browsing: open a random message and scroll its content.
  {
    ctx.begin_check("mail-open-stuck");
    ctx.begin_check("mail-scroll-stuck");
    const UiElement* list = nullptr;
    std::vector<const UiElement*> items;
    for (const UiElement* candidate :
         elements_in_group(snap, features::ElementGroup::VerticalSwipeable)) {
      auto rows = clickable_descendants(*candidate);
      if (!rows.empty()) {
        list = candidate;
        items = std::move(rows);
        break;
      }
    }
    if (list == nullptr) {
      ctx.inconclusive("mail-open-stuck", "no message list with openable rows");
      ctx.inconclusive("mail-scroll-stuck", "no message list with openable rows");
    } else {
      std::uint64_t state = config.seed ^ 0xA5A5A5A5ull;
      const UiElement* item = items[splitmix64(state) % items.size()];
      SimDevice dev = device;
      ctx.current_check = "mail-open-stuck";
      Observation obs = ctx.tap(dev, *item);
      if (ctx.aborted) return ctx.out;
      if (!activity_changed(obs, start)) {
        ctx.finding("mail-open-stuck",
                    "a message row did not open the message content");
        ctx.inconclusive("mail-scroll-stuck", "no message content was opened");
      } else {
        ctx.current_check = "mail-scroll-stuck";
        auto content = elements_in_group(obs.snapshot,
                                         features::ElementGroup::VerticalSwipeable);
        if (content.empty()) {
          ctx.inconclusive("mail-scroll-stuck",
                           "the opened message has no scrollable content");
        } else {
          Observation scroll = ctx.swipe(dev, *content.front(), SwipeDirection::Up);
          if (ctx.aborted) return ctx.out;
          if (!rendering_changed(scroll)) {
            ctx.finding("mail-scroll-stuck", "the message content does not scroll");
          }
        }
      }
    }
  }

  // Compose flow. Each send check starts from a fresh clone so earlier
  // probes cannot contaminate later expectations.
  const UiElement* compose = first_of_role(snap, ctx.lex, "compose",
                                           features::ElementGroup::Clickable);
  struct SendCheck {
    const char* id;
    enum { Empty, Invalid, Valid } recipient;
  };
  const SendCheck send_checks[] = {
      {"mail-send-empty-recipient", SendCheck::Empty},
      {"mail-send-invalid-recipient", SendCheck::Invalid},
      {"mail-send-valid-stuck", SendCheck::Valid},
  };
  for (const SendCheck& check : send_checks) {
    ctx.begin_check(check.id);
    if (compose == nullptr) {
      ctx.inconclusive(check.id, "no compose control resolved");
      continue;
    }
    SimDevice dev = device;
    Observation obs = ctx.tap(dev, *compose);
    if (ctx.aborted) return ctx.out;
    if (!activity_changed(obs, start)) {
      ctx.inconclusive(check.id, "the compose screen did not open");
      continue;
    }
    ScreenSnapshot compose_snap = obs.snapshot;
    std::string compose_activity = compose_snap.activity_name;
    const UiElement* to = first_of_role(compose_snap, ctx.lex, "recipient_field",
                                        features::ElementGroup::TextField);
    const UiElement* send = first_of_role(compose_snap, ctx.lex, "send",
                                          features::ElementGroup::Clickable);
    if (to == nullptr || send == nullptr) {
      ctx.inconclusive(check.id, "compose form elements were not resolved");
      continue;
    }
    if (const UiElement* subject = first_of_role(compose_snap, ctx.lex, "subject_field",
                                                 features::ElementGroup::TextField)) {
      ctx.type_into(dev, *subject, "hello");
      if (ctx.aborted) return ctx.out;
    }
    if (const UiElement* body = first_of_role(compose_snap, ctx.lex, "body_field",
                                              features::ElementGroup::TextField)) {
      ctx.type_into(dev, *body, "hello from the test run");
      if (ctx.aborted) return ctx.out;
    }
    if (check.recipient == SendCheck::Invalid) {
      ctx.type_into(dev, *to, random_alnum(config.seed, 4));
      if (ctx.aborted) return ctx.out;
    } else if (check.recipient == SendCheck::Valid) {
      ctx.type_into(dev, *to, "qa@example.com");
      if (ctx.aborted) return ctx.out;
    }
    Observation sent = ctx.tap(dev, *send);
    if (ctx.aborted) return ctx.out;
    bool delivered = activity_changed(sent, compose_activity);
    switch (check.recipient) {
      case SendCheck::Empty:
        if (delivered) {
          ctx.finding(check.id, "a mail was sent without a recipient address");
        }
        break;
      case SendCheck::Invalid:
        if (delivered) {
          ctx.finding(check.id, "a mail was sent to a malformed recipient address");
        }
        break;
      case SendCheck::Valid:
        if (!delivered) {
          ctx.finding(check.id, "a valid mail could not be sent");
        }
        break;
    }
  }
  return ctx.out;
}

ScenarioOutcome browser_scenario(const SimDevice& device, const ScenarioConfig& config) {
  Ctx ctx(config);
  ScreenSnapshot snap = device.snapshot();

  const UiElement* url = first_of_role(snap, ctx.lex, "url_bar",
                                       features::ElementGroup::TextField);
  const char* checks[] = {"browser-navigate-stuck", "browser-back-stuck",
                          "browser-forward-stuck", "browser-home-stuck",
                          "browser-newtab-stuck"};
  if (url == nullptr) {
    for (const char* check : checks) {
      ctx.begin_check(check);
      ctx.inconclusive(check, "no URL bar resolved");
    }
    return ctx.out;
  }

  const std::string url_one = "alpha.example";
  const std::string url_two = "beta.example";
  SimDevice dev = device;

  bool navigated = false;
  {
    ctx.begin_check("browser-navigate-stuck");
    ctx.type_into(dev, *url, url_one);
    if (ctx.aborted) return ctx.out;
    bool first_ok = visible_text_contains(dev.snapshot(), url_one);
    ctx.type_into(dev, *url, url_two);
    if (ctx.aborted) return ctx.out;
    bool second_ok = visible_text_contains(dev.snapshot(), url_two);
    navigated = first_ok && second_ok;
    if (!navigated) {
      ctx.finding("browser-navigate-stuck",
                  "typing a URL does not navigate to the page");
    }
  }

  bool back_ok = false;
  {
    ctx.begin_check("browser-back-stuck");
    const UiElement* back = first_of_role(snap, ctx.lex, "nav_back",
                                          features::ElementGroup::Clickable);
    if (back == nullptr) {
      ctx.inconclusive("browser-back-stuck", "no back control resolved");
    } else if (!navigated) {
      ctx.inconclusive("browser-back-stuck", "navigation is not working");
    } else {
      Observation obs = ctx.tap(dev, *back);
      if (ctx.aborted) return ctx.out;
      back_ok = rendering_changed(obs) && visible_text_contains(obs.snapshot, url_one);
      if (!back_ok) {
        ctx.finding("browser-back-stuck",
                    "the back control does not restore the previous page");
      }
    }
  }
  {
    ctx.begin_check("browser-forward-stuck");
    const UiElement* forward = first_of_role(snap, ctx.lex, "nav_forward",
                                             features::ElementGroup::Clickable);
    if (forward == nullptr) {
      ctx.inconclusive("browser-forward-stuck", "no forward control resolved");
    } else if (!back_ok) {
      ctx.inconclusive("browser-forward-stuck", "back navigation is not working");
    } else {
      Observation obs = ctx.tap(dev, *forward);
      if (ctx.aborted) return ctx.out;
      if (!(rendering_changed(obs) && visible_text_contains(obs.snapshot, url_two))) {
        ctx.finding("browser-forward-stuck",
                    "the forward control does not restore the next page");
      }
    }
  }
  {
    ctx.begin_check("browser-home-stuck");
    const UiElement* home = first_of_role(snap, ctx.lex, "nav_home",
                                          features::ElementGroup::Clickable);
    if (home == nullptr) {
      ctx.inconclusive("browser-home-stuck", "no home control resolved");
    } else if (!navigated) {
      ctx.inconclusive("browser-home-stuck", "navigation is not working");
    } else {
      Observation obs = ctx.tap(dev, *home);
      if (ctx.aborted) return ctx.out;
      ScreenSnapshot now = dev.snapshot();
      bool home_ok = !visible_text_contains(now, url_one) &&
                     !visible_text_contains(now, url_two);
      if (!home_ok) {
        ctx.finding("browser-home-stuck", "the home control does not leave the page");
      }
    }
  }
  {
    ctx.begin_check("browser-newtab-stuck");
    const UiElement* new_tab = first_of_role(snap, ctx.lex, "new_tab",
                                             features::ElementGroup::Clickable);
    if (new_tab == nullptr) {
      ctx.inconclusive("browser-newtab-stuck", "no new-tab control resolved");
    } else {
      Observation obs = ctx.tap(dev, *new_tab);
      if (ctx.aborted) return ctx.out;
      if (!rendering_changed(obs)) {
        ctx.finding("browser-newtab-stuck", "the new-tab control does nothing");
      }
    }
  }
  return ctx.out;
}

ScenarioOutcome todo_scenario(const SimDevice& device, const ScenarioConfig& config) {
  Ctx ctx(config);
  ScreenSnapshot snap = device.snapshot();

  auto fields = elements_in_group(snap, features::ElementGroup::TextField);
  const UiElement* add = first_of_role(snap, ctx.lex, "add_task",
                                       features::ElementGroup::Clickable);

  if (fields.empty() || add == nullptr) {
    ctx.begin_check("todo-add-stuck");
    ctx.inconclusive("todo-add-stuck", "no task input or add control resolved");
    ctx.begin_check("todo-toggle-stuck");
    ctx.inconclusive("todo-toggle-stuck", "no task input or add control resolved");
    return ctx.out;
  }

  SimDevice dev = device;
  const std::string task = "water the plants";
  {
    ctx.begin_check("todo-add-stuck");
    ctx.type_into(dev, *fields.front(), task);
    if (ctx.aborted) return ctx.out;
    ctx.tap(dev, *add);
    if (ctx.aborted) return ctx.out;
    if (!visible_text_contains(dev.snapshot(), task)) {
      ctx.finding("todo-add-stuck", "an added task does not appear in the list");
    }
  }
  {
    ctx.begin_check("todo-toggle-stuck");
    ScreenSnapshot now = dev.snapshot();
    const UiElement* checkbox = nullptr;
    for (const UiElement* element : clickable_elements(now)) {
      if (element->widget_class.find("CheckBox") != std::string::npos) {
        checkbox = element;
        break;
      }
    }
    if (checkbox == nullptr) {
      ctx.inconclusive("todo-toggle-stuck", "no checkbox present in the task list");
    } else {
      Observation obs = ctx.tap(dev, *checkbox);
      if (ctx.aborted) return ctx.out;
      if (!rendering_changed(obs)) {
        ctx.finding("todo-toggle-stuck", "toggling a task's checkbox does nothing");
      }
    }
  }
  return ctx.out;
}

ScenarioOutcome run_scenario(ActivityType type, const SimDevice& device,
                             const ScenarioConfig& config) {
  if (!device.live()) {
    ScenarioOutcome out;
    out.checks_run = 1;
    out.inconclusive.push_back({"scenario", "the device is not running"});
    return out;
  }
  std::string screen = device.snapshot().activity_name;

  ScenarioOutcome out;
  switch (type) {
    case ActivityType::Splash: out = splash_scenario(device, config); break;
    case ActivityType::Advertisement: out = ad_scenario(device, config); break;
    case ActivityType::Login: out = login_scenario(device, config); break;
    case ActivityType::Portal: out = portal_scenario(device, config); break;
    case ActivityType::Mail: out = mail_scenario(device, config); break;
    case ActivityType::Browser: out = browser_scenario(device, config); break;
    case ActivityType::TodoList: out = todo_scenario(device, config); break;
  }
  for (BugFinding& finding : out.findings) {
    finding.screen_id = screen;
    finding.classified_type = type;
  }
  return out;
}

}  // namespace appcheck::scenarios
