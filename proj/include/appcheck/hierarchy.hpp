#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace appcheck::hierarchy {

/// Pixel rectangle on the virtual display. x1/y1 is the top-left corner,
/// x2/y2 the bottom-right; both corners are inclusive for hit testing.
struct Rect {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;

  int width() const { return x2 - x1; }
  int height() const { return y2 - y1; }
  double center_x() const { return (x1 + x2) / 2.0; }
  double center_y() const { return (y1 + y2) / 2.0; }
  bool contains(int x, int y) const {
    return x >= x1 && x <= x2 && y >= y1 && y <= y2;
  }

  bool operator==(const Rect&) const = default;
};

enum class ScrollOrientation { Horizontal, Vertical, Unspecified };

std::string_view to_string(ScrollOrientation orientation);

/// One widget of a screen. Children are owned by value; the structure is a
/// finite tree by construction.
struct UiElement {
  std::string widget_class;
  std::string resource_id;
  std::string package;
  std::string text;
  Rect bounds;
  bool clickable = false;
  bool long_clickable = false;
  bool scrollable = false;
  bool editable = false;
  ScrollOrientation scroll_orientation = ScrollOrientation::Unspecified;
  std::vector<UiElement> children;

  bool operator==(const UiElement&) const = default;
};

struct ScreenSnapshot {
  UiElement root;
  int screen_width = 0;
  int screen_height = 0;
  std::string foreground_package;
  std::string activity_name;

  bool operator==(const ScreenSnapshot&) const = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line = 0, int column = 0);

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Parses a uiautomator `window_dump` document: nested <node> elements,
/// optionally wrapped in a <hierarchy> root. Screen dimensions are taken from
/// the root node's bounds. `editable` and the scroll orientation are derived
/// from the widget class since the dump carries no such flags.
ScreenSnapshot parse_uiautomator_xml(const std::string& text);

/// Parses the workbench's own snapshot format (JSON, schema documented in
/// docs/formats.md). Explicit `editable`/`orientation` values win over the
/// class-name heuristics.
ScreenSnapshot parse_snapshot_native(const std::string& text);

/// Serializes a snapshot to the native format. Output is deterministic:
/// identical snapshots produce identical bytes, and parsing the result yields
/// a structurally equal snapshot.
std::string write_snapshot_native(const ScreenSnapshot& snapshot);

/// Pre-order traversal; the first entry is always the root. Pointers remain
/// valid as long as the snapshot is alive and unmodified.
std::vector<const UiElement*> flatten(const ScreenSnapshot& snapshot);
std::vector<const UiElement*> flatten(const UiElement& root);

// Class-name heuristics shared by both parse paths and the feature stage.
bool class_implies_editable(const std::string& widget_class);
ScrollOrientation orientation_from_class(const std::string& widget_class);

/// Parses a bounds attribute of the form "[x1,y1][x2,y2]". Throws ParseError
/// naming the offending value on any deviation, including negative or
/// inverted coordinates.
Rect parse_bounds_attribute(const std::string& value, int line = 0, int column = 0);

}  // namespace appcheck::hierarchy
