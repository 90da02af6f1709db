#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "appcheck/hierarchy.hpp"
#include "testsupport.hpp"

using namespace appcheck;
using hierarchy::ParseError;
using hierarchy::Rect;
using hierarchy::ScreenSnapshot;
using hierarchy::ScrollOrientation;
using hierarchy::UiElement;

namespace {

const char* kFixtureDumps[] = {"fixtures/login.xml", "fixtures/ad.xml",
                               "fixtures/portal.xml", "fixtures/inbox.xml",
                               "fixtures/splash.xml"};

int count_nodes(const UiElement& element) {
  int count = 1;
  for (const UiElement& child : element.children) count += count_nodes(child);
  return count;
}

void check_rect_invariants(const UiElement& element) {
  CHECK(element.bounds.x1 >= 0);
  CHECK(element.bounds.y1 >= 0);
  CHECK(element.bounds.x1 <= element.bounds.x2);
  CHECK(element.bounds.y1 <= element.bounds.y2);
  for (const UiElement& child : element.children) check_rect_invariants(child);
}

}  // namespace

TEST_CASE("single root node parses with screen dimensions from its bounds") {
  auto snap = hierarchy::parse_uiautomator_xml(
      R"(<node class="android.widget.FrameLayout" package="p" bounds="[0,0][1080,1920]" clickable="false"/>)");
  CHECK(snap.screen_width == 1080);
  CHECK(snap.screen_height == 1920);
  CHECK(snap.foreground_package == "p");
  CHECK(hierarchy::flatten(snap).size() == 1);
  CHECK_FALSE(snap.root.clickable);
}

TEST_CASE("nested nodes flatten in pre-order") {
  auto snap = hierarchy::parse_uiautomator_xml(R"(
    <hierarchy rotation="0">
      <node class="root" package="p" bounds="[0,0][100,100]">
        <node class="A" package="p" bounds="[0,0][50,50]">
          <node class="B" package="p" bounds="[0,0][25,25]"/>
        </node>
        <node class="C" package="p" bounds="[50,0][100,50]"/>
      </node>
    </hierarchy>)");
  auto flat = hierarchy::flatten(snap);
  REQUIRE(flat.size() == 4);
  CHECK(flat[0]->widget_class == "root");
  CHECK(flat[1]->widget_class == "A");
  CHECK(flat[2]->widget_class == "B");
  CHECK(flat[3]->widget_class == "C");
}

TEST_CASE("malformed bounds string raises an error naming the attribute value") {
  const char* dump =
      R"(<node class="c" package="p" bounds="[0,0][1080"/>)";
  CHECK_THROWS_WITH_AS(hierarchy::parse_uiautomator_xml(dump),
                       doctest::Contains("bounds"), ParseError);
}

TEST_CASE("negative and inverted bounds are rejected") {
  CHECK_THROWS_AS(hierarchy::parse_bounds_attribute("[-5,0][10,10]"), ParseError);
  CHECK_THROWS_AS(hierarchy::parse_bounds_attribute("[20,0][10,10]"), ParseError);
  CHECK_THROWS_AS(hierarchy::parse_bounds_attribute("[0,0][10,10]x"), ParseError);
  Rect rect = hierarchy::parse_bounds_attribute("[1,2][3,4]");
  CHECK(rect == Rect{1, 2, 3, 4});
}

TEST_CASE("malformed XML reports line and column") {
  try {
    hierarchy::parse_uiautomator_xml("<node class=\"c\"\n  bounds=oops/>");
    FAIL("expected a parse error");
  } catch (const ParseError& error) {
    CHECK(error.line() == 2);
    CHECK(error.column() > 0);
  }
}

TEST_CASE("attribute entities are decoded") {
  auto snap = hierarchy::parse_uiautomator_xml(
      R"(<node class="c" package="p" text="a &amp; b &lt;tag&gt;" bounds="[0,0][10,10]"/>)");
  CHECK(snap.root.text == "a & b <tag>");
}

TEST_CASE("editable and orientation derive from the widget class") {
  auto snap = hierarchy::parse_uiautomator_xml(R"(
    <node class="android.widget.FrameLayout" package="p" bounds="[0,0][100,100]">
      <node class="android.widget.EditText" package="p" bounds="[0,0][50,20]"/>
      <node class="androidx.viewpager.widget.ViewPager" package="p" scrollable="true" bounds="[0,20][100,80]"/>
      <node class="android.widget.HorizontalScrollView" package="p" scrollable="true" bounds="[0,80][100,90]"/>
      <node class="android.widget.ListView" package="p" scrollable="true" bounds="[0,90][100,100]"/>
    </node>)");
  const auto& kids = snap.root.children;
  REQUIRE(kids.size() == 4);
  CHECK(kids[0].editable);
  CHECK(kids[1].scroll_orientation == ScrollOrientation::Horizontal);
  CHECK(kids[2].scroll_orientation == ScrollOrientation::Horizontal);
  CHECK(kids[3].scroll_orientation == ScrollOrientation::Unspecified);
}

TEST_CASE("every bundled dump parses and satisfies the rect invariants") {
  for (const char* fixture : kFixtureDumps) {
    CAPTURE(fixture);
    auto snap = hierarchy::parse_uiautomator_xml(read_text_file(source_path(fixture)));
    CHECK(snap.screen_width > 0);
    CHECK(snap.screen_height > 0);
    check_rect_invariants(snap.root);
    // flatten visits every node exactly once (recursive count oracle)
    CHECK(static_cast<int>(hierarchy::flatten(snap).size()) ==
          count_nodes(snap.root));
  }
}

TEST_CASE("native round-trip preserves the tree structurally") {
  for (const char* fixture : kFixtureDumps) {
    CAPTURE(fixture);
    auto snap = hierarchy::parse_uiautomator_xml(read_text_file(source_path(fixture)));
    std::string native = hierarchy::write_snapshot_native(snap);
    auto reparsed = hierarchy::parse_snapshot_native(native);
    CHECK(reparsed == snap);
    // serialization is deterministic
    CHECK(hierarchy::write_snapshot_native(reparsed) == native);
  }
}

TEST_CASE("XML and native forms of the same screen are structurally equal") {
  auto from_xml =
      hierarchy::parse_uiautomator_xml(read_text_file(source_path("fixtures/login.xml")));
  auto from_native = hierarchy::parse_snapshot_native(
      read_text_file(source_path("fixtures/login_native.json")));
  CHECK(from_xml == from_native);
}

TEST_CASE("native parse errors name the field path") {
  CHECK_THROWS_WITH_AS(hierarchy::parse_snapshot_native(R"({"screen_width": 1080})"),
                       doctest::Contains("screen_height"), ParseError);
  CHECK_THROWS_WITH_AS(
      hierarchy::parse_snapshot_native(
          R"({"screen_width": 1080, "screen_height": 1920, "foreground_package": "p"})"),
      doctest::Contains("root"), ParseError);
  CHECK_THROWS_WITH_AS(
      hierarchy::parse_snapshot_native(
          R"({"screen_width": 1080, "screen_height": 0, "root": {}})"),
      doctest::Contains("screen_height"), ParseError);
  CHECK_THROWS_WITH_AS(
      hierarchy::parse_snapshot_native(
          R"({"screen_width": 10, "screen_height": 10,
              "root": {"class": "c", "bounds": [0,0,5,5],
                       "children": [{"class": "k", "bounds": [0,0,2,"x"]}]}})"),
      doctest::Contains("root.children[0].bounds"), ParseError);
}

TEST_CASE("explicit native attributes beat the class heuristics") {
  auto snap = hierarchy::parse_snapshot_native(R"({
    "screen_width": 100, "screen_height": 100,
    "root": {"class": "android.widget.EditText", "bounds": [0,0,100,100],
             "editable": false, "orientation": "vertical", "scrollable": true}
  })");
  CHECK_FALSE(snap.root.editable);
  CHECK(snap.root.scroll_orientation == ScrollOrientation::Vertical);
}

TEST_CASE("flatten on a hand-built tree") {
  UiElement root;
  root.widget_class = "root";
  root.bounds = {0, 0, 10, 10};
  CHECK(hierarchy::flatten(root).size() == 1);

  UiElement a = root, b = root, c = root;
  a.widget_class = "A";
  b.widget_class = "B";
  c.widget_class = "C";
  a.children.push_back(b);
  root.children = {a, c};
  auto flat = hierarchy::flatten(root);
  REQUIRE(flat.size() == 4);
  CHECK(flat[1]->widget_class == "A");
  CHECK(flat[2]->widget_class == "B");
  CHECK(flat[3]->widget_class == "C");
}
