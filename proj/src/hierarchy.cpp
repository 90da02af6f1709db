#include "appcheck/hierarchy.hpp"

#include <cctype>
#include <map>
#include <sstream>

#include "json.hpp"

namespace appcheck::hierarchy {

namespace {

std::string with_position(const std::string& message, int line, int column) {
  if (line <= 0) return message;
  return message + " (line " + std::to_string(line) + ", column " +
         std::to_string(column) + ")";
}

}  // namespace

ParseError::ParseError(const std::string& message, int line, int column)
    : std::runtime_error(with_position(message, line, column)),
      line_(line),
      column_(column) {}

std::string_view to_string(ScrollOrientation orientation) {
  switch (orientation) {
    case ScrollOrientation::Horizontal: return "horizontal";
    case ScrollOrientation::Vertical: return "vertical";
    case ScrollOrientation::Unspecified: return "unspecified";
  }
  return "unspecified";
}

bool class_implies_editable(const std::string& widget_class) {
  return widget_class.find("EditText") != std::string::npos;
}

ScrollOrientation orientation_from_class(const std::string& widget_class) {
  if (widget_class.find("Horizontal") != std::string::npos ||
      widget_class.find("ViewPager") != std::string::npos) {
    return ScrollOrientation::Horizontal;
  }
  return ScrollOrientation::Unspecified;
}

Rect parse_bounds_attribute(const std::string& value, int line, int column) {
  auto fail = [&]() -> Rect {
    throw ParseError("malformed bounds attribute value \"" + value + "\"",
                     line, column);
  };

  size_t pos = 0;
  auto expect = [&](char c) {
    if (pos >= value.size() || value[pos] != c) fail();
    ++pos;
  };
  auto number = [&]() -> long {
    size_t start = pos;
    if (pos < value.size() && value[pos] == '-') ++pos;
    while (pos < value.size() && std::isdigit(static_cast<unsigned char>(value[pos]))) ++pos;
    if (pos == start || (value[start] == '-' && pos == start + 1)) fail();
    return std::stol(value.substr(start, pos - start));
  };

  Rect rect;
  expect('[');
  rect.x1 = static_cast<int>(number());
  expect(',');
  rect.y1 = static_cast<int>(number());
  expect(']');
  expect('[');
  rect.x2 = static_cast<int>(number());
  expect(',');
  rect.y2 = static_cast<int>(number());
  expect(']');
  if (pos != value.size()) fail();

  if (rect.x1 < 0 || rect.y1 < 0 || rect.x1 > rect.x2 || rect.y1 > rect.y2) {
    fail();
  }
  return rect;
}

// ---------------------------------------------------------------------------
// uiautomator XML parsing
// ---------------------------------------------------------------------------

namespace {

// Minimal XML reader for the window_dump subset: prolog, comments, nested
// elements with attributes. Text content and CDATA are skipped. Tracks
// line/column for error reporting.
class XmlCursor {
 public:
  explicit XmlCursor(const std::string& text) : text_(text) {}

  int line() const { return line_; }
  int column() const { return column_; }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, line_, column_);
  }

  bool at_end() const { return pos_ >= text_.size(); }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  char advance() {
    if (at_end()) fail("unexpected end of document");
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    return c;
  }

  bool consume(char c) {
    if (peek() == c) {
      advance();
      return true;
    }
    return false;
  }

  bool consume(std::string_view prefix) {
    if (text_.compare(pos_, prefix.size(), prefix) == 0) {
      for (size_t i = 0; i < prefix.size(); ++i) advance();
      return true;
    }
    return false;
  }

  void skip_whitespace() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }

  void skip_until(std::string_view terminator) {
    while (!consume(terminator)) {
      if (at_end()) fail("unterminated construct, expected \"" + std::string(terminator) + "\"");
      advance();
    }
  }

  std::string read_name() {
    if (at_end()) fail("expected a name");
    char c = peek();
    if (!std::isalpha(static_cast<unsigned char>(c)) && c != '_' && c != ':') {
      fail("expected a name");
    }
    std::string name;
    while (!at_end()) {
      c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
          c == '.' || c == ':') {
        name.push_back(advance());
      } else {
        break;
      }
    }
    return name;
  }

  std::string read_attribute_value() {
    char quote = peek();
    if (quote != '"' && quote != '\'') fail("expected a quoted attribute value");
    advance();
    std::string value;
    while (true) {
      if (at_end()) fail("unterminated attribute value");
      char c = advance();
      if (c == quote) break;
      if (c == '<') fail("'<' is not allowed inside an attribute value");
      if (c == '&') {
        value += read_entity();
      } else {
        value.push_back(c);
      }
    }
    return value;
  }

 private:
  std::string read_entity() {
    std::string name;
    while (!at_end() && peek() != ';') {
      name.push_back(advance());
      if (name.size() > 8) fail("malformed entity reference");
    }
    if (!consume(';')) fail("unterminated entity reference");
    if (name == "amp") return "&";
    if (name == "lt") return "<";
    if (name == "gt") return ">";
    if (name == "quot") return "\"";
    if (name == "apos") return "'";
    if (!name.empty() && name[0] == '#') {
      int code = 0;
      try {
        code = (name.size() > 1 && (name[1] == 'x' || name[1] == 'X'))
                   ? std::stoi(name.substr(2), nullptr, 16)
                   : std::stoi(name.substr(1));
      } catch (const std::exception&) {
        fail("malformed character reference &" + name + ";");
      }
      if (code <= 0 || code > 0x10FFFF) fail("character reference out of range");
      // UTF-8 encode.
      std::string out;
      unsigned cp = static_cast<unsigned>(code);
      if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
      } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      }
      return out;
    }
    fail("unknown entity &" + name + ";");
  }

  const std::string& text_;
  size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

struct RawElement {
  std::string tag;
  std::map<std::string, std::string> attributes;
  std::vector<RawElement> children;
  int line = 0;
  int column = 0;
};

// Parses one element; the cursor sits just past the '<'.
RawElement parse_element(XmlCursor& cursor) {
  RawElement element;
  element.line = cursor.line();
  element.column = cursor.column();
  element.tag = cursor.read_name();

  while (true) {
    cursor.skip_whitespace();
    char c = cursor.peek();
    if (c == '/') {
      cursor.advance();
      if (!cursor.consume('>')) cursor.fail("expected '>' after '/'");
      return element;
    }
    if (c == '>') {
      cursor.advance();
      break;
    }
    int attr_line = cursor.line();
    int attr_column = cursor.column();
    std::string name = cursor.read_name();
    cursor.skip_whitespace();
    if (!cursor.consume('=')) cursor.fail("expected '=' after attribute name");
    cursor.skip_whitespace();
    std::string value = cursor.read_attribute_value();
    if (!element.attributes.emplace(name, value).second) {
      throw ParseError("duplicate attribute \"" + name + "\"", attr_line, attr_column);
    }
  }

  // Content until the matching close tag.
  while (true) {
    if (cursor.at_end()) cursor.fail("missing close tag for <" + element.tag + ">");
    char c = cursor.advance();
    if (c != '<') continue;  // text content is ignored
    if (cursor.consume('!')) {
      if (cursor.consume("--")) {
        cursor.skip_until("-->");
      } else if (cursor.consume("[CDATA[")) {
        cursor.skip_until("]]>");
      } else {
        cursor.fail("unsupported markup declaration");
      }
      continue;
    }
    if (cursor.consume('/')) {
      std::string close = cursor.read_name();
      if (close != element.tag) {
        cursor.fail("mismatched close tag </" + close + ">, expected </" +
                    element.tag + ">");
      }
      cursor.skip_whitespace();
      if (!cursor.consume('>')) cursor.fail("expected '>' in close tag");
      return element;
    }
    if (cursor.consume('?')) {
      cursor.skip_until("?>");
      continue;
    }
    element.children.push_back(parse_element(cursor));
  }
}

RawElement parse_document(const std::string& text) {
  XmlCursor cursor(text);
  while (true) {
    cursor.skip_whitespace();
    if (cursor.at_end()) cursor.fail("document contains no element");
    if (!cursor.consume('<')) cursor.fail("expected '<'");
    if (cursor.consume('?')) {
      cursor.skip_until("?>");
      continue;
    }
    if (cursor.consume('!')) {
      if (cursor.consume("--")) {
        cursor.skip_until("-->");
      } else {
        cursor.skip_until(">");  // DOCTYPE and friends
      }
      continue;
    }
    RawElement root = parse_element(cursor);
    cursor.skip_whitespace();
    while (!cursor.at_end()) {
      // Trailing comments/whitespace only.
      if (!cursor.consume('<')) cursor.fail("unexpected content after the root element");
      if (cursor.consume('!') && cursor.consume("--")) {
        cursor.skip_until("-->");
        cursor.skip_whitespace();
      } else {
        cursor.fail("unexpected content after the root element");
      }
    }
    return root;
  }
}

bool attr_is_true(const RawElement& element, const std::string& name) {
  auto it = element.attributes.find(name);
  return it != element.attributes.end() && it->second == "true";
}

std::string attr_or_empty(const RawElement& element, const std::string& name) {
  auto it = element.attributes.find(name);
  return it == element.attributes.end() ? std::string() : it->second;
}

UiElement node_to_element(const RawElement& node) {
  if (node.tag != "node") {
    throw ParseError("unexpected element <" + node.tag + ">, expected <node>",
                     node.line, node.column);
  }
  UiElement element;
  element.widget_class = attr_or_empty(node, "class");
  element.resource_id = attr_or_empty(node, "resource-id");
  element.package = attr_or_empty(node, "package");
  element.text = attr_or_empty(node, "text");
  auto bounds_it = node.attributes.find("bounds");
  if (bounds_it != node.attributes.end()) {
    element.bounds = parse_bounds_attribute(bounds_it->second, node.line, node.column);
  }
  element.clickable = attr_is_true(node, "clickable");
  element.long_clickable = attr_is_true(node, "long-clickable");
  element.scrollable = attr_is_true(node, "scrollable");
  element.editable = class_implies_editable(element.widget_class);
  element.scroll_orientation = orientation_from_class(element.widget_class);
  element.children.reserve(node.children.size());
  for (const RawElement& child : node.children) {
    element.children.push_back(node_to_element(child));
  }
  return element;
}

}  // namespace

ScreenSnapshot parse_uiautomator_xml(const std::string& text) {
  RawElement document = parse_document(text);

  const RawElement* root_node = nullptr;
  if (document.tag == "hierarchy") {
    if (document.children.size() != 1) {
      throw ParseError("<hierarchy> must contain exactly one root <node>",
                       document.line, document.column);
    }
    root_node = &document.children[0];
  } else if (document.tag == "node") {
    root_node = &document;
  } else {
    throw ParseError("unexpected root element <" + document.tag + ">",
                     document.line, document.column);
  }

  ScreenSnapshot snapshot;
  snapshot.root = node_to_element(*root_node);
  snapshot.screen_width = snapshot.root.bounds.x2;
  snapshot.screen_height = snapshot.root.bounds.y2;
  snapshot.foreground_package = snapshot.root.package;
  if (snapshot.screen_width <= 0 || snapshot.screen_height <= 0) {
    throw ParseError("root node bounds do not describe a non-empty screen",
                     root_node->line, root_node->column);
  }
  return snapshot;
}

// ---------------------------------------------------------------------------
// Native snapshot format
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& path, const std::string& message) {
  throw ParseError("snapshot schema violation at " + path + ": " + message);
}

const json& require_field(const json& object, const std::string& path,
                          const std::string& key) {
  if (!object.is_object()) schema_fail(path, "expected an object");
  auto it = object.find(key);
  if (it == object.end()) schema_fail(path + "." + key, "missing field");
  return *it;
}

int require_int(const json& object, const std::string& path, const std::string& key) {
  const json& value = require_field(object, path, key);
  if (!value.is_number_integer()) schema_fail(path + "." + key, "expected an integer");
  return value.get<int>();
}

std::string optional_string(const json& object, const std::string& path,
                            const std::string& key, const std::string& fallback) {
  auto it = object.find(key);
  if (it == object.end()) return fallback;
  if (!it->is_string()) schema_fail(path + "." + key, "expected a string");
  return it->get<std::string>();
}

bool optional_bool(const json& object, const std::string& path,
                   const std::string& key, bool fallback) {
  auto it = object.find(key);
  if (it == object.end()) return fallback;
  if (!it->is_boolean()) schema_fail(path + "." + key, "expected a boolean");
  return it->get<bool>();
}

ScrollOrientation orientation_from_name(const std::string& name, const std::string& path) {
  if (name == "horizontal") return ScrollOrientation::Horizontal;
  if (name == "vertical") return ScrollOrientation::Vertical;
  if (name == "unspecified") return ScrollOrientation::Unspecified;
  schema_fail(path, "unknown orientation \"" + name + "\"");
}

UiElement element_from_json(const json& node, const std::string& path,
                            const std::string& default_package) {
  if (!node.is_object()) schema_fail(path, "expected an object");
  UiElement element;
  element.widget_class = optional_string(node, path, "class", "");
  if (element.widget_class.empty()) schema_fail(path + ".class", "missing or empty field");
  element.resource_id = optional_string(node, path, "resource_id", "");
  element.package = optional_string(node, path, "package", default_package);
  element.text = optional_string(node, path, "text", "");

  const json& bounds = require_field(node, path, "bounds");
  if (!bounds.is_array() || bounds.size() != 4) {
    schema_fail(path + ".bounds", "expected [x1, y1, x2, y2]");
  }
  for (size_t i = 0; i < 4; ++i) {
    if (!bounds[i].is_number_integer()) {
      schema_fail(path + ".bounds", "expected [x1, y1, x2, y2] of integers");
    }
  }
  element.bounds = {bounds[0].get<int>(), bounds[1].get<int>(),
                    bounds[2].get<int>(), bounds[3].get<int>()};
  if (element.bounds.x1 < 0 || element.bounds.y1 < 0 ||
      element.bounds.x1 > element.bounds.x2 ||
      element.bounds.y1 > element.bounds.y2) {
    schema_fail(path + ".bounds", "coordinates must be non-negative with x1<=x2, y1<=y2");
  }

  element.clickable = optional_bool(node, path, "clickable", false);
  element.long_clickable = optional_bool(node, path, "long_clickable", false);
  element.scrollable = optional_bool(node, path, "scrollable", false);
  // Explicit values win over the class-name heuristics.
  element.editable = optional_bool(node, path, "editable",
                                   class_implies_editable(element.widget_class));
  auto orientation_it = node.find("orientation");
  if (orientation_it != node.end()) {
    if (!orientation_it->is_string()) schema_fail(path + ".orientation", "expected a string");
    element.scroll_orientation =
        orientation_from_name(orientation_it->get<std::string>(), path + ".orientation");
  } else {
    element.scroll_orientation = orientation_from_class(element.widget_class);
  }

  auto children_it = node.find("children");
  if (children_it != node.end()) {
    if (!children_it->is_array()) schema_fail(path + ".children", "expected an array");
    element.children.reserve(children_it->size());
    for (size_t i = 0; i < children_it->size(); ++i) {
      element.children.push_back(element_from_json(
          (*children_it)[i], path + ".children[" + std::to_string(i) + "]",
          default_package));
    }
  }
  return element;
}

json element_to_json(const UiElement& element) {
  json node;
  node["class"] = element.widget_class;
  node["resource_id"] = element.resource_id;
  node["package"] = element.package;
  node["text"] = element.text;
  node["bounds"] = {element.bounds.x1, element.bounds.y1, element.bounds.x2,
                    element.bounds.y2};
  node["clickable"] = element.clickable;
  node["long_clickable"] = element.long_clickable;
  node["scrollable"] = element.scrollable;
  node["editable"] = element.editable;
  node["orientation"] = std::string(to_string(element.scroll_orientation));
  json children = json::array();
  for (const UiElement& child : element.children) {
    children.push_back(element_to_json(child));
  }
  node["children"] = std::move(children);
  return node;
}

}  // namespace

ScreenSnapshot parse_snapshot_native(const std::string& text) {
  json document;
  try {
    document = json::parse(text);
  } catch (const json::parse_error& error) {
    throw ParseError(std::string("snapshot is not valid JSON: ") + error.what());
  }
  if (!document.is_object()) schema_fail("$", "expected an object");

  ScreenSnapshot snapshot;
  snapshot.screen_width = require_int(document, "$", "screen_width");
  snapshot.screen_height = require_int(document, "$", "screen_height");
  if (snapshot.screen_width <= 0) schema_fail("$.screen_width", "must be positive");
  if (snapshot.screen_height <= 0) schema_fail("$.screen_height", "must be positive");
  snapshot.foreground_package = optional_string(document, "$", "foreground_package", "");
  snapshot.activity_name = optional_string(document, "$", "activity_name", "");

  const json& root = require_field(document, "$", "root");
  snapshot.root = element_from_json(root, "root", snapshot.foreground_package);
  if (snapshot.root.bounds.x2 > snapshot.screen_width ||
      snapshot.root.bounds.y2 > snapshot.screen_height) {
    schema_fail("root.bounds", "root must fit within the screen dimensions");
  }
  return snapshot;
}

std::string write_snapshot_native(const ScreenSnapshot& snapshot) {
  json document;
  document["schema_version"] = 1;
  document["screen_width"] = snapshot.screen_width;
  document["screen_height"] = snapshot.screen_height;
  document["foreground_package"] = snapshot.foreground_package;
  document["activity_name"] = snapshot.activity_name;
  document["root"] = element_to_json(snapshot.root);
  return document.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

namespace {

void flatten_into(const UiElement& element, std::vector<const UiElement*>& out) {
  out.push_back(&element);
  for (const UiElement& child : element.children) flatten_into(child, out);
}

}  // namespace

std::vector<const UiElement*> flatten(const UiElement& root) {
  std::vector<const UiElement*> out;
  flatten_into(root, out);
  return out;
}

std::vector<const UiElement*> flatten(const ScreenSnapshot& snapshot) {
  return flatten(snapshot.root);
}

}  // namespace appcheck::hierarchy
