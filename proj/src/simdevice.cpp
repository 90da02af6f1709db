#include "appcheck/simdevice.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace appcheck::sim {

namespace {

using nlohmann::json;

[[noreturn]] void load_fail(const std::string& context, const std::string& message) {
  throw std::runtime_error("app definition: " + context + ": " + message);
}

std::string value_type_name(const Value& value) {
  switch (value.index()) {
    case 0: return "bool";
    case 1: return "int";
    default: return "string";
  }
}

bool is_valid_email(const std::string& text) {
  size_t at = text.find('@');
  if (at == std::string::npos || at == 0) return false;
  if (text.find('@', at + 1) != std::string::npos) return false;
  std::string domain = text.substr(at + 1);
  size_t dot = domain.find('.');
  return dot != std::string::npos && dot != 0 && dot != domain.size() - 1;
}

}  // namespace

std::string value_to_string(const Value& value) {
  switch (value.index()) {
    case 0: return std::get<bool>(value) ? "true" : "false";
    case 1: return std::to_string(std::get<std::int64_t>(value));
    default: return std::get<std::string>(value);
  }
}

// ---------------------------------------------------------------------------
// Guard / effect evaluation
// ---------------------------------------------------------------------------

namespace {

std::string register_of(const std::map<std::string, std::string>& registers,
                        const std::string& element) {
  auto it = registers.find(element);
  return it == registers.end() ? std::string() : it->second;
}

bool eval_guard_on(const Guard& guard, const std::map<std::string, Value>& state,
                   const std::map<std::string, std::string>& registers) {
  switch (guard.kind) {
    case Guard::Kind::Always:
      return true;
    case Guard::Kind::StateEq:
      return state.at(guard.subject) == guard.literal;
    case Guard::Kind::StateNe:
      return state.at(guard.subject) != guard.literal;
    case Guard::Kind::RegEmpty:
      return register_of(registers, guard.subject).empty();
    case Guard::Kind::RegNonempty:
      return !register_of(registers, guard.subject).empty();
    case Guard::Kind::RegEq:
      return register_of(registers, guard.subject) == guard.literal_text;
    case Guard::Kind::RegEmail:
      return is_valid_email(register_of(registers, guard.subject));
    case Guard::Kind::Not:
      return !eval_guard_on(guard.children.at(0), state, registers);
    case Guard::Kind::All:
      for (const Guard& child : guard.children) {
        if (!eval_guard_on(child, state, registers)) return false;
      }
      return true;
    case Guard::Kind::Any:
      for (const Guard& child : guard.children) {
        if (eval_guard_on(child, state, registers)) return true;
      }
      return false;
  }
  return false;
}

std::string interpolate(const std::string& text,
                        const std::map<std::string, Value>& state) {
  std::string out;
  out.reserve(text.size());
  size_t pos = 0;
  while (pos < text.size()) {
    char c = text[pos];
    if (c != '{') {
      out.push_back(c);
      ++pos;
      continue;
    }
    size_t close = text.find('}', pos);
    std::string name = text.substr(pos + 1, close - pos - 1);
    out += value_to_string(state.at(name));
    pos = close + 1;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Definition parsing
// ---------------------------------------------------------------------------

namespace {

ActionKind action_kind_from_name(const std::string& name, const std::string& context) {
  if (name == "tap") return ActionKind::Tap;
  if (name == "long_press") return ActionKind::LongPress;
  if (name == "type_text") return ActionKind::TypeText;
  if (name == "swipe_left") return ActionKind::SwipeLeft;
  if (name == "swipe_right") return ActionKind::SwipeRight;
  if (name == "swipe_up") return ActionKind::SwipeUp;
  if (name == "swipe_down") return ActionKind::SwipeDown;
  if (name == "back") return ActionKind::Back;
  load_fail(context, "unknown action \"" + name + "\"");
}

Value value_from_json(const json& node, const std::string& context) {
  if (node.is_boolean()) return node.get<bool>();
  if (node.is_number_integer()) return node.get<std::int64_t>();
  if (node.is_string()) return node.get<std::string>();
  load_fail(context, "expected a bool, integer or string literal");
}

std::string require_string(const json& node, const std::string& key,
                           const std::string& context) {
  auto it = node.find(key);
  if (it == node.end() || !it->is_string()) {
    load_fail(context, "missing string field \"" + key + "\"");
  }
  return it->get<std::string>();
}

Guard parse_guard(const json& node, const std::string& context) {
  Guard guard;
  if (node.is_boolean()) {
    if (!node.get<bool>()) load_fail(context, "a guard of literal false is never satisfiable");
    return guard;  // Always
  }
  if (!node.is_object() || node.size() != 1) {
    load_fail(context, "guard must be true or an object with one operator");
  }
  const std::string op = node.begin().key();
  const json& body = node.begin().value();

  auto pair_args = [&](Guard::Kind kind) {
    if (!body.is_array() || body.size() != 2 || !body[0].is_string()) {
      load_fail(context, "\"" + op + "\" expects [name, literal]");
    }
    guard.kind = kind;
    guard.subject = body[0].get<std::string>();
    if (kind == Guard::Kind::RegEq) {
      if (!body[1].is_string()) load_fail(context, "\"reg_eq\" literal must be a string");
      guard.literal_text = body[1].get<std::string>();
    } else {
      guard.literal = value_from_json(body[1], context);
    }
  };
  auto subject_arg = [&](Guard::Kind kind) {
    if (!body.is_string()) load_fail(context, "\"" + op + "\" expects an element id");
    guard.kind = kind;
    guard.subject = body.get<std::string>();
  };

  if (op == "all" || op == "any") {
    if (!body.is_array() || body.empty()) {
      load_fail(context, "\"" + op + "\" expects a non-empty array of guards");
    }
    guard.kind = op == "all" ? Guard::Kind::All : Guard::Kind::Any;
    for (size_t i = 0; i < body.size(); ++i) {
      guard.children.push_back(
          parse_guard(body[i], context + " " + op + "[" + std::to_string(i) + "]"));
    }
  } else if (op == "not") {
    guard.kind = Guard::Kind::Not;
    guard.children.push_back(parse_guard(body, context + " not"));
  } else if (op == "state_eq") {
    pair_args(Guard::Kind::StateEq);
  } else if (op == "state_ne") {
    pair_args(Guard::Kind::StateNe);
  } else if (op == "reg_eq") {
    pair_args(Guard::Kind::RegEq);
  } else if (op == "reg_empty") {
    subject_arg(Guard::Kind::RegEmpty);
  } else if (op == "reg_nonempty") {
    subject_arg(Guard::Kind::RegNonempty);
  } else if (op == "reg_email") {
    subject_arg(Guard::Kind::RegEmail);
  } else {
    load_fail(context, "unknown guard operator \"" + op + "\"");
  }
  return guard;
}

Assignment parse_assignment(const json& node, const std::string& context) {
  Assignment assignment;
  if (node.is_object()) {
    if (node.size() != 1) load_fail(context, "assignment object must have one key");
    const std::string op = node.begin().key();
    const json& body = node.begin().value();
    if (op == "$reg") {
      if (!body.is_string()) load_fail(context, "\"$reg\" expects an element id");
      assignment.kind = Assignment::Kind::CopyRegister;
      assignment.source = body.get<std::string>();
    } else if (op == "$var") {
      if (!body.is_string()) load_fail(context, "\"$var\" expects a state variable");
      assignment.kind = Assignment::Kind::CopyVar;
      assignment.source = body.get<std::string>();
    } else if (op == "$inc") {
      if (!body.is_number_integer()) load_fail(context, "\"$inc\" expects an integer");
      assignment.kind = Assignment::Kind::Increment;
      assignment.delta = body.get<std::int64_t>();
    } else {
      load_fail(context, "unknown assignment operator \"" + op + "\"");
    }
  } else {
    assignment.kind = Assignment::Kind::Literal;
    assignment.literal = value_from_json(node, context);
  }
  return assignment;
}

Effect parse_effect(const json& node, const std::string& context) {
  Effect effect;
  if (node.is_string()) {
    std::string name = node.get<std::string>();
    if (name == "noop") {
      effect.kind = Effect::Kind::NoOp;
    } else if (name == "exit") {
      effect.kind = Effect::Kind::Exit;
    } else {
      load_fail(context, "unknown effect \"" + name + "\"");
    }
    return effect;
  }
  if (!node.is_object() || node.size() != 1) {
    load_fail(context, "effect must be \"noop\", \"exit\" or a one-key object");
  }
  const std::string op = node.begin().key();
  const json& body = node.begin().value();
  if (op == "goto") {
    if (!body.is_string()) load_fail(context, "\"goto\" expects a screen id");
    effect.kind = Effect::Kind::GoTo;
    effect.target = body.get<std::string>();
  } else if (op == "crash") {
    if (!body.is_string() || body.get<std::string>().empty()) {
      load_fail(context, "\"crash\" expects a non-empty message");
    }
    effect.kind = Effect::Kind::Crash;
    effect.message = body.get<std::string>();
  } else if (op == "set") {
    if (!body.is_object() || body.empty()) {
      load_fail(context, "\"set\" expects a non-empty object of assignments");
    }
    effect.kind = Effect::Kind::SetState;
    for (auto it = body.begin(); it != body.end(); ++it) {
      effect.assigns[it.key()] =
          parse_assignment(it.value(), context + " set \"" + it.key() + "\"");
    }
  } else {
    load_fail(context, "unknown effect operator \"" + op + "\"");
  }
  return effect;
}

TransitionRule parse_rule(const json& node, const std::string& context) {
  if (!node.is_object()) load_fail(context, "expected a transition object");
  TransitionRule rule;
  if (auto it = node.find("rule_id"); it != node.end()) {
    if (!it->is_string()) load_fail(context, "\"rule_id\" must be a string");
    rule.rule_id = it->get<std::string>();
  }
  auto on = node.find("on");
  if (on == node.end() || !on->is_object()) {
    load_fail(context, "missing trigger object \"on\"");
  }
  rule.on.action = action_kind_from_name(require_string(*on, "action", context), context);
  if (auto it = on->find("element"); it != on->end()) {
    if (!it->is_string()) load_fail(context, "trigger element must be a string");
    rule.on.element = it->get<std::string>();
  }
  if (rule.on.action == ActionKind::Back) {
    if (!rule.on.element.empty()) load_fail(context, "back triggers take no element");
  } else if (rule.on.element.empty()) {
    load_fail(context, "trigger requires an element id");
  }
  if (auto it = node.find("when"); it != node.end()) {
    rule.when = parse_guard(*it, context + " guard");
  }
  auto effect = node.find("do");
  if (effect == node.end()) load_fail(context, "missing effect \"do\"");
  rule.effect = parse_effect(*effect, context + " effect");
  return rule;
}

ElementTemplate parse_element(const json& node, const std::string& context) {
  if (!node.is_object()) load_fail(context, "expected an element object");
  ElementTemplate element;
  element.id = require_string(node, "id", context);
  element.widget_class = require_string(node, "class", context);

  auto bounds = node.find("bounds");
  if (bounds == node.end() || !bounds->is_array() || bounds->size() != 4) {
    load_fail(context + " element \"" + element.id + "\"",
              "bounds must be [x1, y1, x2, y2]");
  }
  for (const auto& v : *bounds) {
    if (!v.is_number_integer()) {
      load_fail(context + " element \"" + element.id + "\"", "bounds must be integers");
    }
  }
  element.bounds = {(*bounds)[0].get<int>(), (*bounds)[1].get<int>(),
                    (*bounds)[2].get<int>(), (*bounds)[3].get<int>()};
  const hierarchy::Rect& r = element.bounds;
  if (r.x1 < 0 || r.y1 < 0 || r.x1 > r.x2 || r.y1 > r.y2 || r.x2 > kScreenWidth ||
      r.y2 > kScreenHeight) {
    load_fail(context + " element \"" + element.id + "\"",
              "bounds must fit the " + std::to_string(kScreenWidth) + "x" +
                  std::to_string(kScreenHeight) + " display");
  }

  auto get_bool = [&](const char* key, bool fallback) {
    auto it = node.find(key);
    if (it == node.end()) return fallback;
    if (!it->is_boolean()) {
      load_fail(context + " element \"" + element.id + "\"",
                std::string("\"") + key + "\" must be a boolean");
    }
    return it->get<bool>();
  };
  element.clickable = get_bool("clickable", false);
  element.long_clickable = get_bool("long_clickable", false);
  element.scrollable = get_bool("scrollable", false);
  element.decor = get_bool("decor", false);
  if (node.contains("editable")) element.editable = get_bool("editable", false);
  if (auto it = node.find("resource_id"); it != node.end()) {
    element.resource_id = it->get<std::string>();
  }
  if (auto it = node.find("text"); it != node.end()) {
    element.text = it->get<std::string>();
  }
  if (auto it = node.find("orientation"); it != node.end()) {
    std::string name = it->get<std::string>();
    if (name == "horizontal") {
      element.orientation = hierarchy::ScrollOrientation::Horizontal;
    } else if (name == "vertical") {
      element.orientation = hierarchy::ScrollOrientation::Vertical;
    } else if (name == "unspecified") {
      element.orientation = hierarchy::ScrollOrientation::Unspecified;
    } else {
      load_fail(context + " element \"" + element.id + "\"",
                "unknown orientation \"" + name + "\"");
    }
  }
  if (auto it = node.find("visible_if"); it != node.end()) {
    element.visible_if =
        parse_guard(*it, context + " element \"" + element.id + "\" visible_if");
  }
  if (auto it = node.find("children"); it != node.end()) {
    if (!it->is_array()) {
      load_fail(context + " element \"" + element.id + "\"", "children must be an array");
    }
    for (const auto& child : *it) {
      element.children.push_back(parse_element(child, context));
    }
  }
  return element;
}

RuleMatch parse_match(const json& node, const std::string& context) {
  if (!node.is_object()) load_fail(context, "\"match\" must be an object");
  RuleMatch match;
  if (auto it = node.find("rule_id"); it != node.end()) {
    match.rule_id = it->get<std::string>();
  }
  if (auto it = node.find("action"); it != node.end()) {
    match.action = action_kind_from_name(it->get<std::string>(), context);
  }
  if (auto it = node.find("element"); it != node.end()) {
    match.element = it->get<std::string>();
  }
  if (auto it = node.find("element_prefix"); it != node.end()) {
    match.element_prefix = it->get<std::string>();
  }
  if (auto it = node.find("occurrence"); it != node.end()) {
    if (!it->is_number_integer()) load_fail(context, "\"occurrence\" must be an integer");
    match.occurrence = it->get<int>();
  }
  if (match.rule_id.empty() && !match.action && match.element.empty() &&
      match.element_prefix.empty()) {
    load_fail(context, "\"match\" selects nothing");
  }
  return match;
}

Mutation parse_mutation(const json& node, const std::string& context) {
  if (!node.is_object()) load_fail(context, "expected a mutation object");
  Mutation mutation;
  mutation.screen = require_string(node, "screen", context);
  std::string op = require_string(node, "op", context);
  if (op == "replace_effect") {
    mutation.op = Mutation::Op::ReplaceEffect;
    mutation.match = parse_match(node.at("match"), context);
    mutation.effect = parse_effect(node.at("effect"), context);
  } else if (op == "replace_guard") {
    mutation.op = Mutation::Op::ReplaceGuard;
    mutation.match = parse_match(node.at("match"), context);
    mutation.guard = parse_guard(node.at("guard"), context);
  } else if (op == "insert_rule") {
    mutation.op = Mutation::Op::InsertRule;
    if (auto it = node.find("index"); it != node.end()) {
      mutation.index = it->get<int>();
    }
    mutation.rule = parse_rule(node.at("rule"), context + " inserted rule");
  } else if (op == "remove_auto_advance") {
    mutation.op = Mutation::Op::RemoveAutoAdvance;
  } else {
    load_fail(context, "unknown mutation op \"" + op + "\"");
  }
  return mutation;
}

// --- validation ------------------------------------------------------------

void collect_element_ids(const ElementTemplate& element, const std::string& screen_id,
                         std::set<std::string>& ids) {
  if (!ids.insert(element.id).second) {
    load_fail("screen \"" + screen_id + "\"",
              "duplicate element id \"" + element.id + "\"");
  }
  for (const ElementTemplate& child : element.children) {
    collect_element_ids(child, screen_id, ids);
  }
}

void validate_guard(const Guard& guard, const AppDef& app,
                    const std::set<std::string>& element_ids,
                    const std::string& context) {
  switch (guard.kind) {
    case Guard::Kind::StateEq:
    case Guard::Kind::StateNe: {
      auto it = app.initial_state.find(guard.subject);
      if (it == app.initial_state.end()) {
        load_fail(context, "guard references undeclared state \"" + guard.subject + "\"");
      }
      if (it->second.index() != guard.literal.index()) {
        load_fail(context, "guard literal type mismatch for \"" + guard.subject +
                               "\" (" + value_type_name(it->second) + ")");
      }
      break;
    }
    case Guard::Kind::RegEmpty:
    case Guard::Kind::RegNonempty:
    case Guard::Kind::RegEq:
    case Guard::Kind::RegEmail:
      if (!element_ids.count(guard.subject)) {
        load_fail(context, "guard references unknown element \"" + guard.subject + "\"");
      }
      break;
    default:
      break;
  }
  for (const Guard& child : guard.children) {
    validate_guard(child, app, element_ids, context);
  }
}

void validate_effect(const Effect& effect, const AppDef& app,
                     const std::set<std::string>& element_ids,
                     const std::string& context) {
  switch (effect.kind) {
    case Effect::Kind::GoTo:
      if (!app.screens.count(effect.target)) {
        load_fail(context, "goto target \"" + effect.target + "\" does not exist");
      }
      break;
    case Effect::Kind::SetState:
      for (const auto& [var, assignment] : effect.assigns) {
        auto it = app.initial_state.find(var);
        if (it == app.initial_state.end()) {
          load_fail(context, "assignment to undeclared state \"" + var + "\"");
        }
        switch (assignment.kind) {
          case Assignment::Kind::Literal:
            if (it->second.index() != assignment.literal.index()) {
              load_fail(context, "assignment literal type mismatch for \"" + var + "\"");
            }
            break;
          case Assignment::Kind::CopyRegister:
            if (!std::holds_alternative<std::string>(it->second)) {
              load_fail(context, "\"$reg\" target \"" + var + "\" must be a string");
            }
            if (!element_ids.count(assignment.source)) {
              load_fail(context, "\"$reg\" references unknown element \"" +
                                     assignment.source + "\"");
            }
            break;
          case Assignment::Kind::CopyVar: {
            auto src = app.initial_state.find(assignment.source);
            if (src == app.initial_state.end()) {
              load_fail(context,
                        "\"$var\" references undeclared state \"" + assignment.source + "\"");
            }
            if (src->second.index() != it->second.index()) {
              load_fail(context, "\"$var\" type mismatch for \"" + var + "\"");
            }
            break;
          }
          case Assignment::Kind::Increment:
            if (!std::holds_alternative<std::int64_t>(it->second)) {
              load_fail(context, "\"$inc\" target \"" + var + "\" must be an integer");
            }
            break;
        }
      }
      break;
    default:
      break;
  }
}

void validate_text_placeholders(const ElementTemplate& element, const AppDef& app,
                                const std::string& context) {
  const std::string& text = element.text;
  size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string::npos) {
    size_t close = text.find('}', pos);
    if (close == std::string::npos) {
      load_fail(context, "element \"" + element.id + "\" has an unbalanced placeholder");
    }
    std::string name = text.substr(pos + 1, close - pos - 1);
    if (!app.initial_state.count(name)) {
      load_fail(context, "element \"" + element.id +
                             "\" references undeclared state \"" + name + "\"");
    }
    pos = close + 1;
  }
  for (const ElementTemplate& child : element.children) {
    validate_text_placeholders(child, app, context);
  }
}

void validate_element_guards(const ElementTemplate& element, const AppDef& app,
                             const std::set<std::string>& element_ids,
                             const std::string& context) {
  if (element.visible_if) {
    validate_guard(*element.visible_if, app, element_ids,
                   context + " element \"" + element.id + "\"");
  }
  for (const ElementTemplate& child : element.children) {
    validate_element_guards(child, app, element_ids, context);
  }
}

void validate_rule(const TransitionRule& rule, const AppDef& app,
                   const std::set<std::string>& element_ids,
                   const std::string& context) {
  if (rule.on.action != ActionKind::Back && !element_ids.count(rule.on.element)) {
    load_fail(context, "trigger references unknown element \"" + rule.on.element + "\"");
  }
  validate_guard(rule.when, app, element_ids, context);
  validate_effect(rule.effect, app, element_ids, context);
}

std::vector<size_t> match_rule_indices(const ScreenDef& screen, const RuleMatch& match) {
  std::vector<size_t> hits;
  for (size_t i = 0; i < screen.transitions.size(); ++i) {
    const TransitionRule& rule = screen.transitions[i];
    if (!match.rule_id.empty()) {
      if (rule.rule_id == match.rule_id) hits.push_back(i);
      continue;
    }
    if (match.action && rule.on.action != *match.action) continue;
    if (!match.element.empty() && rule.on.element != match.element) continue;
    if (!match.element_prefix.empty() &&
        rule.on.element.rfind(match.element_prefix, 0) != 0) {
      continue;
    }
    hits.push_back(i);
  }
  if (match.occurrence) {
    if (*match.occurrence >= 0 && static_cast<size_t>(*match.occurrence) < hits.size()) {
      hits = {hits[static_cast<size_t>(*match.occurrence)]};
    } else {
      hits.clear();
    }
  }
  return hits;
}

void apply_mutation(ScreenDef& screen, const Mutation& mutation,
                    const std::string& context) {
  switch (mutation.op) {
    case Mutation::Op::ReplaceEffect:
    case Mutation::Op::ReplaceGuard: {
      std::vector<size_t> hits = match_rule_indices(screen, mutation.match);
      if (hits.empty()) load_fail(context, "mutation matches no transition rule");
      for (size_t i : hits) {
        if (mutation.op == Mutation::Op::ReplaceEffect) {
          screen.transitions[i].effect = mutation.effect;
        } else {
          screen.transitions[i].when = mutation.guard;
        }
      }
      break;
    }
    case Mutation::Op::InsertRule: {
      int index = std::clamp(mutation.index, 0,
                             static_cast<int>(screen.transitions.size()));
      screen.transitions.insert(screen.transitions.begin() + index, mutation.rule);
      break;
    }
    case Mutation::Op::RemoveAutoAdvance:
      if (!screen.auto_advance) {
        load_fail(context, "screen \"" + screen.id + "\" has no auto advance to remove");
      }
      screen.auto_advance.reset();
      break;
  }
}

void validate_app(const AppDef& app) {
  if (app.package.empty()) load_fail("package", "must be non-empty");
  if (!app.screens.count(app.initial_screen)) {
    load_fail("initial_screen", "screen \"" + app.initial_screen + "\" does not exist");
  }

  std::set<std::string> activity_names;
  for (const auto& [screen_id, screen] : app.screens) {
    std::string context = "screen \"" + screen_id + "\"";
    if (screen.activity_name.empty()) load_fail(context, "activity_name is required");
    if (!activity_names.insert(screen.activity_name).second) {
      load_fail(context, "duplicate activity_name \"" + screen.activity_name + "\"");
    }
    if (screen.root.visible_if) {
      load_fail(context, "the root element cannot be conditional");
    }
    const hierarchy::Rect& r = screen.root.bounds;
    if (r.x1 != 0 || r.y1 != 0 || r.x2 != kScreenWidth || r.y2 != kScreenHeight) {
      load_fail(context, "root element must cover the full display");
    }

    std::set<std::string> element_ids;
    collect_element_ids(screen.root, screen_id, element_ids);
    validate_text_placeholders(screen.root, app, context);
    validate_element_guards(screen.root, app, element_ids, context);
    if (screen.auto_advance) {
      if (screen.auto_advance->delay_ms < 0) {
        load_fail(context, "auto_advance delay must be non-negative");
      }
      if (!app.screens.count(screen.auto_advance->target)) {
        load_fail(context, "auto_advance target \"" + screen.auto_advance->target +
                               "\" does not exist");
      }
    }

    std::set<std::string> rule_ids;
    for (size_t i = 0; i < screen.transitions.size(); ++i) {
      const TransitionRule& rule = screen.transitions[i];
      std::string rule_context = context + " transition " + std::to_string(i);
      if (!rule.rule_id.empty() && !rule_ids.insert(rule.rule_id).second) {
        load_fail(rule_context, "duplicate rule_id \"" + rule.rule_id + "\"");
      }
      validate_rule(rule, app, element_ids, rule_context);
    }
  }

  // Every fault must apply cleanly to the pristine app.
  for (const auto& [fault_id, fault] : app.faults) {
    std::string context = "fault \"" + fault_id + "\"";
    if (fault.description.empty()) load_fail(context, "description is required");
    for (size_t i = 0; i < fault.mutations.size(); ++i) {
      const Mutation& mutation = fault.mutations[i];
      std::string mutation_context = context + " mutation " + std::to_string(i);
      auto screen_it = app.screens.find(mutation.screen);
      if (screen_it == app.screens.end()) {
        load_fail(mutation_context,
                  "targets unknown screen \"" + mutation.screen + "\"");
      }
      if (mutation.op == Mutation::Op::InsertRule) {
        std::set<std::string> element_ids;
        collect_element_ids(screen_it->second.root, screen_it->first, element_ids);
        validate_rule(mutation.rule, app, element_ids, mutation_context);
      }
      ScreenDef probe = screen_it->second;
      apply_mutation(probe, mutation, mutation_context);
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// SimApp
// ---------------------------------------------------------------------------

SimApp::SimApp(AppDef def) : def_(std::make_shared<AppDef>(std::move(def))) {
  validate_app(*def_);
}

SimApp SimApp::load(const std::string& definition_text) {
  json document;
  try {
    document = json::parse(definition_text);
  } catch (const json::parse_error& error) {
    throw std::runtime_error(std::string("app definition is not valid JSON: ") +
                             error.what());
  }
  if (!document.is_object()) load_fail("$", "expected an object");

  AppDef app;
  app.package = require_string(document, "package", "$");
  app.initial_screen = require_string(document, "initial_screen", "$");

  if (auto it = document.find("state"); it != document.end()) {
    if (!it->is_object()) load_fail("state", "expected an object");
    for (auto var = it->begin(); var != it->end(); ++var) {
      app.initial_state[var.key()] =
          value_from_json(var.value(), "state \"" + var.key() + "\"");
    }
  }

  auto screens = document.find("screens");
  if (screens == document.end() || !screens->is_object() || screens->empty()) {
    load_fail("screens", "at least one screen is required");
  }
  for (auto entry = screens->begin(); entry != screens->end(); ++entry) {
    const std::string& screen_id = entry.key();
    const json& body = entry.value();
    std::string context = "screen \"" + screen_id + "\"";
    ScreenDef screen;
    screen.id = screen_id;
    screen.activity_name = require_string(body, "activity_name", context);
    std::string type_name = require_string(body, "type", context);
    auto type = activity_type_from_string(type_name);
    if (!type) load_fail(context, "unknown activity type \"" + type_name + "\"");
    screen.true_type = *type;
    if (auto it = body.find("in_dataset"); it != body.end()) {
      screen.in_dataset = it->get<bool>();
    }
    if (auto it = body.find("auto_advance"); it != body.end()) {
      AutoAdvance advance;
      advance.delay_ms = it->at("delay_ms").get<std::int64_t>();
      advance.target = require_string(*it, "target", context + " auto_advance");
      screen.auto_advance = advance;
    }
    auto root = body.find("root");
    if (root == body.end()) load_fail(context, "missing root element");
    screen.root = parse_element(*root, context);
    if (auto it = body.find("transitions"); it != body.end()) {
      if (!it->is_array()) load_fail(context, "transitions must be an array");
      for (size_t i = 0; i < it->size(); ++i) {
        screen.transitions.push_back(
            parse_rule((*it)[i], context + " transition " + std::to_string(i)));
      }
    }
    app.screens[screen_id] = std::move(screen);
  }

  if (auto faults = document.find("faults"); faults != document.end()) {
    if (!faults->is_object()) load_fail("faults", "expected an object");
    for (auto entry = faults->begin(); entry != faults->end(); ++entry) {
      FaultSpec fault;
      fault.fault_id = entry.key();
      std::string context = "fault \"" + fault.fault_id + "\"";
      fault.description = require_string(entry.value(), "description", context);
      auto mutations = entry.value().find("mutations");
      if (mutations == entry.value().end() || !mutations->is_array() ||
          mutations->empty()) {
        load_fail(context, "at least one mutation is required");
      }
      for (size_t i = 0; i < mutations->size(); ++i) {
        fault.mutations.push_back(parse_mutation(
            (*mutations)[i], context + " mutation " + std::to_string(i)));
      }
      app.faults[fault.fault_id] = std::move(fault);
    }
  }

  return SimApp(std::move(app));
}

SimApp SimApp::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open app definition: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load(buffer.str());
}

void SimApp::inject_fault(const std::string& fault_id) {
  if (!def_->faults.count(fault_id)) {
    throw std::invalid_argument("unknown fault id \"" + fault_id + "\"");
  }
  active_.insert(fault_id);
}

void SimApp::revert_fault(const std::string& fault_id) {
  if (!def_->faults.count(fault_id)) {
    throw std::invalid_argument("unknown fault id \"" + fault_id + "\"");
  }
  active_.erase(fault_id);
}

ScreenDef SimApp::effective_screen(const std::string& screen_id) const {
  auto it = def_->screens.find(screen_id);
  if (it == def_->screens.end()) {
    throw std::invalid_argument("unknown screen id \"" + screen_id + "\"");
  }
  ScreenDef screen = it->second;
  for (const std::string& fault_id : active_) {  // std::set: fault-id order
    const FaultSpec& fault = def_->faults.at(fault_id);
    for (const Mutation& mutation : fault.mutations) {
      if (mutation.screen != screen_id) continue;
      apply_mutation(screen, mutation, "fault \"" + fault_id + "\"");
    }
  }
  return screen;
}

std::map<std::string, ScreenDef> SimApp::effective_screens() const {
  std::map<std::string, ScreenDef> screens;
  for (const auto& [screen_id, _] : def_->screens) {
    screens[screen_id] = effective_screen(screen_id);
  }
  return screens;
}

bool SimApp::operator==(const SimApp& other) const {
  return def_->package == other.def_->package &&
         def_->initial_screen == other.def_->initial_screen &&
         def_->initial_state == other.def_->initial_state &&
         effective_screens() == other.effective_screens();
}

const std::vector<FaultCatalogEntry>& fault_catalog() {
  static const std::vector<FaultCatalogEntry> catalog = {
      {"ML-1", "A user cannot open an email's content from the inbox list.",
       "k9replica"},
      {"ML-2", "A user can send an email without recipient's address.", "k9replica"},
      {"ML-3", "A user cannot send a valid email.", "k9replica"},
      {"ML-4", "A user can send an email with an invalid recipient's address.",
       "k9replica"},
      {"LS-1", "A user can sign in without filing in a username and a password.",
       "k9replica"},
      {"LS-2", "A user can sign in with an invalid username and an invalid password.",
       "k9replica"},
      {"LS-3", "A user cannot sign in with a valid username and a valid password.",
       "k9replica"},
      {"PT-1",
       "A user cannot swipe the screen left and right in order to browse the "
       "portal's different sections.",
       "crimetalk_replica"},
      {"PT-2",
       "A user cannot click on the menu's different tabs in order to browse the "
       "portal's different sections.",
       "crimetalk_replica"},
      {"PT-3", "A user cannot open an article from the activity.", "crimetalk_replica"},
  };
  return catalog;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

hierarchy::UiElement render_element(const AppDef& app, const ElementTemplate& tpl,
                                    const std::map<std::string, Value>& state,
                                    const std::map<std::string, std::string>& registers) {
  hierarchy::UiElement element;
  element.widget_class = tpl.widget_class;
  if (tpl.resource_id.empty()) {
    element.resource_id = app.package + ":id/" + tpl.id;
  } else if (tpl.resource_id.find(':') != std::string::npos) {
    element.resource_id = tpl.resource_id;
  } else {
    element.resource_id = app.package + ":id/" + tpl.resource_id;
  }
  element.package = app.package;
  element.bounds = tpl.bounds;
  element.clickable = tpl.clickable;
  element.long_clickable = tpl.long_clickable;
  element.scrollable = tpl.scrollable;
  element.editable = tpl.editable.value_or(
      hierarchy::class_implies_editable(tpl.widget_class));
  element.scroll_orientation = tpl.orientation.value_or(
      hierarchy::orientation_from_class(tpl.widget_class));

  auto reg = registers.find(tpl.id);
  if (element.editable && reg != registers.end()) {
    element.text = reg->second;  // typed text shows in the field
  } else {
    element.text = interpolate(tpl.text, state);
  }

  for (const ElementTemplate& child : tpl.children) {
    if (child.visible_if && !eval_guard_on(*child.visible_if, state, registers)) {
      continue;
    }
    element.children.push_back(render_element(app, child, state, registers));
  }
  return element;
}

}  // namespace

hierarchy::ScreenSnapshot render_screen(
    const AppDef& app, const ScreenDef& screen,
    const std::map<std::string, Value>& state,
    const std::map<std::string, std::string>& registers) {
  hierarchy::ScreenSnapshot snapshot;
  snapshot.screen_width = kScreenWidth;
  snapshot.screen_height = kScreenHeight;
  snapshot.foreground_package = app.package;
  snapshot.activity_name = screen.activity_name;
  snapshot.root = render_element(app, screen.root, state, registers);
  return snapshot;
}

hierarchy::ScreenSnapshot render_screen(const AppDef& app, const ScreenDef& screen) {
  return render_screen(app, screen, app.initial_state, {});
}

// ---------------------------------------------------------------------------
// SimDevice
// ---------------------------------------------------------------------------

DeviceAction DeviceAction::tap_at(int x, int y) {
  return DeviceAction{Kind::TapAt, x, y, SwipeDirection::Left, "", 0};
}
DeviceAction DeviceAction::long_press_at(int x, int y) {
  return DeviceAction{Kind::LongPressAt, x, y, SwipeDirection::Left, "", 0};
}
DeviceAction DeviceAction::swipe_at(int x, int y, SwipeDirection direction) {
  return DeviceAction{Kind::SwipeAt, x, y, direction, "", 0};
}
DeviceAction DeviceAction::type_focused(std::string text) {
  return DeviceAction{Kind::TypeFocused, 0, 0, SwipeDirection::Left, std::move(text), 0};
}
DeviceAction DeviceAction::back() {
  return DeviceAction{Kind::Back, 0, 0, SwipeDirection::Left, "", 0};
}
DeviceAction DeviceAction::wait(std::int64_t ms) {
  return DeviceAction{Kind::Wait, 0, 0, SwipeDirection::Left, "", ms};
}

SimDevice::SimDevice(SimApp app)
    : app_(std::move(app)),
      screens_(app_.effective_screens()),
      current_(app_.def().initial_screen),
      state_(app_.def().initial_state) {}

const ScreenDef& SimDevice::screen() const { return screens_.at(current_); }

hierarchy::ScreenSnapshot SimDevice::snapshot() const {
  if (status_ != Status::Live) {
    throw std::logic_error("snapshot: the app is not running");
  }
  return render_screen(app_.def(), screen(), state_, registers_);
}

std::string SimDevice::current_activity() const { return screen().activity_name; }

std::vector<SimDevice::RenderedNode> SimDevice::rendered_nodes() const {
  std::vector<RenderedNode> nodes;
  struct Frame {
    const ElementTemplate* tpl;
    int parent;
    int depth;
  };
  std::vector<Frame> stack{{&screen().root, -1, 0}};
  // Depth-first with explicit stack, children pushed in reverse so the
  // resulting order is pre-order.
  while (!stack.empty()) {
    Frame frame = stack.back();
    stack.pop_back();
    RenderedNode node;
    node.tpl = frame.tpl;
    node.parent = frame.parent;
    node.depth = frame.depth;
    node.editable = frame.tpl->editable.value_or(
        hierarchy::class_implies_editable(frame.tpl->widget_class));
    int index = static_cast<int>(nodes.size());
    nodes.push_back(node);
    for (auto it = frame.tpl->children.rbegin(); it != frame.tpl->children.rend();
         ++it) {
      if (it->visible_if && !eval_guard_on(*it->visible_if, state_, registers_)) {
        continue;
      }
      stack.push_back({&*it, index, frame.depth + 1});
    }
  }
  return nodes;
}

int SimDevice::hit_test(const std::vector<RenderedNode>& nodes, int x, int y) const {
  // Pre-order equals draw order (parents before children, siblings in
  // sequence), so the last containing node is the one painted on top.
  int best = -1;
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].tpl->bounds.contains(x, y)) best = static_cast<int>(i);
  }
  return best;
}

bool SimDevice::eval_guard(const Guard& guard) const {
  return eval_guard_on(guard, state_, registers_);
}

void SimDevice::apply_effect(const Effect& effect) {
  switch (effect.kind) {
    case Effect::Kind::NoOp:
      break;
    case Effect::Kind::GoTo:
      enter_screen(effect.target);
      break;
    case Effect::Kind::Exit:
      status_ = Status::Exited;
      break;
    case Effect::Kind::Crash:
      status_ = Status::Crashed;
      crash_message_ = effect.message;
      break;
    case Effect::Kind::SetState:
      for (const auto& [var, assignment] : effect.assigns) {
        Value& slot = state_.at(var);
        switch (assignment.kind) {
          case Assignment::Kind::Literal:
            slot = assignment.literal;
            break;
          case Assignment::Kind::CopyRegister:
            slot = register_of(registers_, assignment.source);
            break;
          case Assignment::Kind::CopyVar:
            slot = state_.at(assignment.source);
            break;
          case Assignment::Kind::Increment:
            slot = std::get<std::int64_t>(slot) + assignment.delta;
            break;
        }
      }
      break;
  }
}

void SimDevice::enter_screen(const std::string& screen_id) {
  current_ = screen_id;
  registers_.clear();
  focused_.clear();
  screen_entry_ = clock_;
}

void SimDevice::run_auto_advance() {
  while (status_ == Status::Live) {
    const ScreenDef& def = screen();
    if (!def.auto_advance || clock_ - screen_entry_ < def.auto_advance->delay_ms) {
      break;
    }
    enter_screen(def.auto_advance->target);
  }
}

void SimDevice::restart() {
  status_ = Status::Live;
  crash_message_.clear();
  state_ = app_.def().initial_state;
  enter_screen(app_.def().initial_screen);
}

namespace {

// Virtual duration of each input event, in milliseconds. These stand in for
// real gesture timings so timed auto-advance works for any event source.
std::int64_t action_cost_ms(const DeviceAction& action) {
  switch (action.kind) {
    case DeviceAction::Kind::TapAt: return 40;
    case DeviceAction::Kind::LongPressAt: return 700;
    case DeviceAction::Kind::SwipeAt: return 80;
    case DeviceAction::Kind::TypeFocused: return 60;
    case DeviceAction::Kind::Back: return 30;
    case DeviceAction::Kind::Wait: return action.wait_ms;
  }
  return 0;
}

ActionKind swipe_action(SwipeDirection direction) {
  switch (direction) {
    case SwipeDirection::Left: return ActionKind::SwipeLeft;
    case SwipeDirection::Right: return ActionKind::SwipeRight;
    case SwipeDirection::Up: return ActionKind::SwipeUp;
    case SwipeDirection::Down: return ActionKind::SwipeDown;
  }
  return ActionKind::SwipeLeft;
}

}  // namespace

Observation SimDevice::step(const DeviceAction& action) {
  if (status_ == Status::Exited) {
    return {ObservationKind::AppExited, {}, ""};
  }
  if (status_ == Status::Crashed) {
    return {ObservationKind::Crashed, {}, crash_message_};
  }

  clock_ += action_cost_ms(action);

  std::optional<std::string> before;  // serialized pre-action rendering
  auto ensure_before = [&]() {
    if (!before) before = hierarchy::write_snapshot_native(snapshot());
  };

  // Resolve the target element chain (self first, then ancestors).
  std::vector<std::string> chain;
  std::optional<ActionKind> rule_action;
  switch (action.kind) {
    case DeviceAction::Kind::TapAt:
    case DeviceAction::Kind::LongPressAt:
    case DeviceAction::Kind::SwipeAt: {
      std::vector<RenderedNode> nodes = rendered_nodes();
      int hit = hit_test(nodes, action.x, action.y);
      for (int i = hit; i >= 0; i = nodes[i].parent) {
        chain.push_back(nodes[i].tpl->id);
      }
      if (action.kind == DeviceAction::Kind::TapAt) {
        // Focus moves to the deepest editable element under the tap.
        focused_.clear();
        for (int i = hit; i >= 0; i = nodes[i].parent) {
          if (nodes[i].editable) {
            focused_ = nodes[i].tpl->id;
            break;
          }
        }
        rule_action = ActionKind::Tap;
      } else if (action.kind == DeviceAction::Kind::LongPressAt) {
        rule_action = ActionKind::LongPress;
      } else {
        rule_action = swipe_action(action.direction);
      }
      break;
    }
    case DeviceAction::Kind::TypeFocused: {
      if (!focused_.empty()) {
        std::vector<RenderedNode> nodes = rendered_nodes();
        for (size_t i = 0; i < nodes.size(); ++i) {
          if (nodes[i].tpl->id != focused_ || !nodes[i].editable) continue;
          ensure_before();
          registers_[focused_] = action.text;  // stored before guard evaluation
          for (int j = static_cast<int>(i); j >= 0; j = nodes[j].parent) {
            chain.push_back(nodes[j].tpl->id);
          }
          rule_action = ActionKind::TypeText;
          break;
        }
      }
      break;
    }
    case DeviceAction::Kind::Back:
      rule_action = ActionKind::Back;
      break;
    case DeviceAction::Kind::Wait:
      break;
  }

  if (rule_action) {
    for (const TransitionRule& rule : screen().transitions) {
      if (rule.on.action != *rule_action) continue;
      if (*rule_action != ActionKind::Back &&
          std::find(chain.begin(), chain.end(), rule.on.element) == chain.end()) {
        continue;
      }
      if (!eval_guard(rule.when)) continue;
      ensure_before();
      apply_effect(rule.effect);
      break;
    }
  }

  if (status_ == Status::Live) {
    const ScreenDef& def = screen();
    if (def.auto_advance && clock_ - screen_entry_ >= def.auto_advance->delay_ms) {
      ensure_before();
      run_auto_advance();
    }
  }

  if (status_ == Status::Exited) {
    return {ObservationKind::AppExited, {}, ""};
  }
  if (status_ == Status::Crashed) {
    return {ObservationKind::Crashed, {}, crash_message_};
  }

  hierarchy::ScreenSnapshot after = snapshot();
  if (before && *before != hierarchy::write_snapshot_native(after)) {
    return {ObservationKind::ScreenChanged, std::move(after), ""};
  }
  return {ObservationKind::NoChange, std::move(after), ""};
}

}  // namespace appcheck::sim
