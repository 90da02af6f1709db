#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "appcheck/activity_type.hpp"
#include "appcheck/hierarchy.hpp"

namespace appcheck::sim {

// The fixed virtual display. A single geometry keeps rendered feature
// vectors stable across runs and machines.
inline constexpr int kScreenWidth = 1080;
inline constexpr int kScreenHeight = 1920;

/// App state variables are typed; guards and effects are validated against
/// the declared initial state at load time.
using Value = std::variant<bool, std::int64_t, std::string>;

std::string value_to_string(const Value& value);

enum class ActionKind {
  Tap,
  LongPress,
  TypeText,
  SwipeLeft,
  SwipeRight,
  SwipeUp,
  SwipeDown,
  Back,
};

/// Predicate over app state and typed-text registers. Total: evaluation
/// never fails on a validated app.
struct Guard {
  enum class Kind {
    Always,
    StateEq,      // state var == literal
    StateNe,      // state var != literal
    RegEmpty,     // register of element is empty/unset
    RegNonempty,
    RegEq,        // register of element == string literal
    RegEmail,     // register holds a well-formed address:
                  // non-empty local part, one '@', domain with an inner dot
    Not,
    All,
    Any,
  };

  Kind kind = Kind::Always;
  std::string subject;          // state variable or element id
  Value literal = false;        // for StateEq / StateNe
  std::string literal_text;     // for RegEq
  std::vector<Guard> children;  // for Not / All / Any

  bool operator==(const Guard&) const = default;
};

struct Assignment {
  enum class Kind {
    Literal,       // var = literal
    CopyRegister,  // var = register of element `source`
    CopyVar,       // var = another state variable
    Increment,     // var += delta (integer vars only)
  };

  Kind kind = Kind::Literal;
  Value literal = false;
  std::string source;
  std::int64_t delta = 0;

  bool operator==(const Assignment&) const = default;
};

struct Effect {
  enum class Kind { NoOp, GoTo, SetState, Exit, Crash };

  Kind kind = Kind::NoOp;
  std::string target;                         // GoTo
  std::string message;                        // Crash
  std::map<std::string, Assignment> assigns;  // SetState

  bool operator==(const Effect&) const = default;
};

struct Trigger {
  ActionKind action = ActionKind::Tap;
  std::string element;  // empty for Back triggers

  bool operator==(const Trigger&) const = default;
};

struct TransitionRule {
  std::string rule_id;  // optional stable handle for fault mutations
  Trigger on;
  Guard when;
  Effect effect;

  bool operator==(const TransitionRule&) const = default;
};

struct ElementTemplate {
  std::string id;  // unique within the screen
  std::string widget_class;
  std::string resource_id;  // rendered as "<package>:id/<id>" when empty
  std::string text;         // may reference state with {var} placeholders
  hierarchy::Rect bounds;
  bool clickable = false;
  bool long_clickable = false;
  bool scrollable = false;
  std::optional<bool> editable;  // absent: class-name heuristic
  std::optional<hierarchy::ScrollOrientation> orientation;
  bool decor = false;               // dataset generator may drop it
  std::optional<Guard> visible_if;  // absent: always rendered
  std::vector<ElementTemplate> children;

  bool operator==(const ElementTemplate&) const = default;
};

struct AutoAdvance {
  std::int64_t delay_ms = 0;
  std::string target;

  bool operator==(const AutoAdvance&) const = default;
};

struct ScreenDef {
  std::string id;
  std::string activity_name;
  ActivityType true_type = ActivityType::Splash;
  bool in_dataset = true;  // dataset generator source flag
  std::optional<AutoAdvance> auto_advance;
  ElementTemplate root;
  std::vector<TransitionRule> transitions;

  bool operator==(const ScreenDef&) const = default;
};

/// Selects transition rules for a mutation: by rule_id, or by trigger action
/// plus element id / element-id prefix. `occurrence` narrows a multi-rule
/// match to the n-th hit (0-based).
struct RuleMatch {
  std::string rule_id;
  std::optional<ActionKind> action;
  std::string element;
  std::string element_prefix;
  std::optional<int> occurrence;

  bool operator==(const RuleMatch&) const = default;
};

struct Mutation {
  enum class Op { ReplaceEffect, ReplaceGuard, InsertRule, RemoveAutoAdvance };

  Op op = Op::ReplaceEffect;
  std::string screen;
  RuleMatch match;      // ReplaceEffect / ReplaceGuard
  Effect effect;        // ReplaceEffect
  Guard guard;          // ReplaceGuard
  int index = 0;        // InsertRule position
  TransitionRule rule;  // InsertRule

  bool operator==(const Mutation&) const = default;
};

struct FaultSpec {
  std::string fault_id;
  std::string description;
  std::vector<Mutation> mutations;

  bool operator==(const FaultSpec&) const = default;
};

struct AppDef {
  std::string package;
  std::string initial_screen;
  std::map<std::string, Value> initial_state;
  std::map<std::string, ScreenDef> screens;
  std::map<std::string, FaultSpec> faults;
};

/// A loaded app definition plus the set of currently injected faults. The
/// pristine definition is immutable and shared; injecting then reverting a
/// fault therefore restores the original app exactly.
class SimApp {
 public:
  explicit SimApp(AppDef def);

  /// Parses and validates an app definition (JSON, docs/formats.md). Any
  /// schema violation, dangling reference, duplicate element id or
  /// inapplicable fault raises std::runtime_error naming the location.
  static SimApp load(const std::string& definition_text);
  static SimApp load_file(const std::string& path);

  const AppDef& def() const { return *def_; }
  const std::set<std::string>& active_faults() const { return active_; }

  /// Throws std::invalid_argument for fault ids missing from the catalog.
  void inject_fault(const std::string& fault_id);
  void revert_fault(const std::string& fault_id);

  /// The screen with all active fault mutations applied, in fault-id order.
  ScreenDef effective_screen(const std::string& screen_id) const;
  std::map<std::string, ScreenDef> effective_screens() const;

  /// Structural equality of the effective app (package, initial state and
  /// all effective screens).
  bool operator==(const SimApp& other) const;

 private:
  std::shared_ptr<const AppDef> def_;
  std::set<std::string> active_;
};

struct FaultCatalogEntry {
  std::string fault_id;
  std::string description;
  std::string app;  // bundled definition that carries the fault
};

/// The ten bundled logical faults used by the evaluation harness. Extra
/// test-only faults inside app definitions (ids prefixed "ts-") are not
/// part of the catalog.
const std::vector<FaultCatalogEntry>& fault_catalog();

/// Renders a screen onto the virtual display with the given state and typed
/// text. Deterministic: identical inputs produce identical snapshots.
hierarchy::ScreenSnapshot render_screen(
    const AppDef& app, const ScreenDef& screen,
    const std::map<std::string, Value>& state,
    const std::map<std::string, std::string>& registers);

/// Render with the app's initial state and no typed text.
hierarchy::ScreenSnapshot render_screen(const AppDef& app, const ScreenDef& screen);

enum class SwipeDirection { Left, Right, Up, Down };

/// Coordinate-level input, the way a driver or a monkey issues it. Taps,
/// long-presses and swipes resolve to the topmost element containing the
/// point; rule matching walks the element's ancestor chain.
struct DeviceAction {
  enum class Kind { TapAt, LongPressAt, SwipeAt, TypeFocused, Back, Wait };

  Kind kind = Kind::TapAt;
  int x = 0;
  int y = 0;
  SwipeDirection direction = SwipeDirection::Left;
  std::string text;
  std::int64_t wait_ms = 0;

  static DeviceAction tap_at(int x, int y);
  static DeviceAction long_press_at(int x, int y);
  static DeviceAction swipe_at(int x, int y, SwipeDirection direction);
  static DeviceAction type_focused(std::string text);
  static DeviceAction back();
  static DeviceAction wait(std::int64_t ms);
};

enum class ObservationKind { ScreenChanged, NoChange, AppExited, Crashed };

struct Observation {
  ObservationKind kind = ObservationKind::NoChange;
  hierarchy::ScreenSnapshot snapshot;  // valid for ScreenChanged / NoChange
  std::string crash_message;           // valid for Crashed
};

/// Deterministic single-app device. Copyable: a copy is an independent
/// device sharing the immutable definition, which test scenarios use to run
/// checks from identical starting states.
class SimDevice {
 public:
  explicit SimDevice(SimApp app);

  bool live() const { return status_ == Status::Live; }
  bool exited() const { return status_ == Status::Exited; }
  bool crashed() const { return status_ == Status::Crashed; }
  const std::string& crash_message() const { return crash_message_; }

  /// Throws std::logic_error when the app has exited or crashed.
  hierarchy::ScreenSnapshot snapshot() const;

  /// Applies one input event. Every action advances the virtual clock, so
  /// splash-style auto-advance fires for any caller, not only for explicit
  /// waits. Total: unmatched actions observe NoChange, and stepping a dead
  /// device re-reports its terminal observation.
  Observation step(const DeviceAction& action);

  /// Fresh launch: initial screen, initial state, cleared registers. The
  /// virtual clock keeps running (device uptime).
  void restart();

  const SimApp& app() const { return app_; }
  const std::string& current_screen_id() const { return current_; }
  std::string current_activity() const;
  std::int64_t clock_ms() const { return clock_; }

 private:
  enum class Status { Live, Exited, Crashed };

  struct RenderedNode {
    const ElementTemplate* tpl = nullptr;
    int parent = -1;
    int depth = 0;
    bool editable = false;
  };

  const ScreenDef& screen() const;
  std::vector<RenderedNode> rendered_nodes() const;
  int hit_test(const std::vector<RenderedNode>& nodes, int x, int y) const;
  bool eval_guard(const Guard& guard) const;
  void apply_effect(const Effect& effect);
  void enter_screen(const std::string& screen_id);
  void run_auto_advance();

  SimApp app_;
  std::map<std::string, ScreenDef> screens_;  // effective, faults applied
  std::string current_;
  std::map<std::string, Value> state_;
  std::map<std::string, std::string> registers_;
  std::string focused_;
  Status status_ = Status::Live;
  std::string crash_message_;
  std::int64_t clock_ = 0;
  std::int64_t screen_entry_ = 0;
};

}  // namespace appcheck::sim
