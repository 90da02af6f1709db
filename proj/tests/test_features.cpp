#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "appcheck/dataset.hpp"
#include "appcheck/features.hpp"
#include "testsupport.hpp"

using namespace appcheck;
using features::ElementGroup;
using features::FeatureVector;
using features::ScreenRegion;
using hierarchy::ScreenSnapshot;
using hierarchy::UiElement;

namespace {

UiElement make_element(hierarchy::Rect bounds) {
  UiElement element;
  element.widget_class = "android.view.View";
  element.bounds = bounds;
  return element;
}

FeatureVector golden(std::initializer_list<double> values) {
  FeatureVector fv;
  int i = 0;
  for (double v : values) fv.values[i++] = v;
  return fv;
}

FeatureVector extract_fixture(const std::string& relative) {
  auto snap = hierarchy::parse_uiautomator_xml(read_text_file(source_path(relative)));
  return features::extract_features(snap, lexicon::Lexicon::builtin());
}

}  // namespace

TEST_CASE("region assignment follows the 20-60-20 split by vertical center") {
  CHECK(features::assign_region(make_element({0, 100, 100, 150}), 1000) ==
        ScreenRegion::Top);  // center 125
  CHECK(features::assign_region(make_element({0, 450, 100, 550}), 1000) ==
        ScreenRegion::Middle);  // center 500
  CHECK(features::assign_region(make_element({0, 750, 100, 850}), 1000) ==
        ScreenRegion::Bottom);  // center exactly 800
  CHECK(features::assign_region(make_element({0, 150, 100, 250}), 1000) ==
        ScreenRegion::Middle);  // center exactly 200
  CHECK_THROWS_AS(features::assign_region(make_element({0, 0, 1, 1}), 0),
                  std::invalid_argument);
}

TEST_CASE("group classification") {
  UiElement button = make_element({0, 0, 10, 10});
  button.clickable = true;
  auto groups = features::classify_element_groups(button);
  CHECK(groups.contains(ElementGroup::Clickable));
  CHECK_FALSE(groups.contains(ElementGroup::TextField));

  UiElement pager = make_element({0, 0, 10, 10});
  pager.widget_class = "androidx.viewpager.widget.ViewPager";
  pager.scrollable = true;
  groups = features::classify_element_groups(pager);
  CHECK(groups.contains(ElementGroup::HorizontalSwipeable));
  CHECK_FALSE(groups.contains(ElementGroup::VerticalSwipeable));

  UiElement list = make_element({0, 0, 10, 10});
  list.widget_class = "android.widget.ListView";
  list.scrollable = true;
  groups = features::classify_element_groups(list);
  CHECK(groups.contains(ElementGroup::VerticalSwipeable));
  CHECK_FALSE(groups.contains(ElementGroup::HorizontalSwipeable));

  UiElement field = make_element({0, 0, 10, 10});
  field.widget_class = "android.widget.EditText";
  CHECK(features::classify_element_groups(field).contains(ElementGroup::TextField));

  // A clickable, scrollable element belongs to two groups at once.
  UiElement hybrid = make_element({0, 0, 10, 10});
  hybrid.clickable = true;
  hybrid.scrollable = true;
  groups = features::classify_element_groups(hybrid);
  CHECK(groups.contains(ElementGroup::Clickable));
  CHECK(groups.contains(ElementGroup::VerticalSwipeable));
}

TEST_CASE("drawer detection by class and by clickable resource id") {
  lexicon::Lexicon lex = lexicon::Lexicon::builtin();

  ScreenSnapshot by_class;
  by_class.screen_width = 100;
  by_class.screen_height = 100;
  by_class.root = make_element({0, 0, 100, 100});
  by_class.root.widget_class = "androidx.drawerlayout.widget.DrawerLayout";
  CHECK(features::detect_drawer(by_class, lex));

  ScreenSnapshot by_id = by_class;
  by_id.root.widget_class = "android.widget.FrameLayout";
  UiElement burger = make_element({0, 0, 10, 10});
  burger.clickable = true;
  burger.resource_id = "com.app:id/menu_button";
  by_id.root.children.push_back(burger);
  CHECK(features::detect_drawer(by_id, lex));

  // Same id without the clickable flag does not count.
  by_id.root.children[0].clickable = false;
  CHECK_FALSE(features::detect_drawer(by_id, lex));

  ScreenSnapshot plain = by_class;
  plain.root.widget_class = "android.widget.FrameLayout";
  CHECK_FALSE(features::detect_drawer(plain, lex));
}

TEST_CASE("root-only snapshot yields all zeros except the element count") {
  ScreenSnapshot snap;
  snap.screen_width = 1080;
  snap.screen_height = 1920;
  snap.root = make_element({0, 0, 1080, 1920});
  auto fv = features::extract_features(snap, lexicon::Lexicon::builtin());
  CHECK(fv == golden({0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0}));
}

TEST_CASE("fixture dumps map to their committed golden vectors") {
  // Hand-counted from the fixture files; see the element layouts there.
  CHECK(extract_fixture("fixtures/login.xml") ==
        golden({0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 2, 0, 9, 0, 0}));
  CHECK(extract_fixture("fixtures/ad.xml") ==
        golden({1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 5, 0, 0}));
  CHECK(extract_fixture("fixtures/portal.xml") ==
        golden({1, 3, 3, 0, 1, 0, 0, 1, 0, 0, 0, 0, 13, 1, 1}));
  CHECK(extract_fixture("fixtures/inbox.xml") ==
        golden({2, 3, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 12, 1, 0}));
  CHECK(extract_fixture("fixtures/splash.xml") ==
        golden({0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 3, 0, 0}));
}

TEST_CASE("XML and native forms produce the identical feature vector") {
  auto lex = lexicon::Lexicon::builtin();
  auto from_xml =
      hierarchy::parse_uiautomator_xml(read_text_file(source_path("fixtures/login.xml")));
  auto from_native = hierarchy::parse_snapshot_native(
      read_text_file(source_path("fixtures/login_native.json")));
  CHECK(features::extract_features(from_xml, lex) ==
        features::extract_features(from_native, lex));
}

TEST_CASE("per-cell counts are bounded by the element count and sum per group") {
  auto lex = lexicon::Lexicon::builtin();
  for (const char* fixture : {"fixtures/login.xml", "fixtures/ad.xml",
                              "fixtures/portal.xml", "fixtures/inbox.xml"}) {
    CAPTURE(fixture);
    auto snap = hierarchy::parse_uiautomator_xml(read_text_file(source_path(fixture)));
    auto fv = features::extract_features(snap, lex);
    for (int i = 0; i < 12; ++i) CHECK(fv.values[i] <= fv.element_count());
    CHECK(fv.long_clickable_count() <= fv.element_count());
    CHECK((fv.drawer_flag() == 0.0 || fv.drawer_flag() == 1.0));

    // Region partition is exclusive: group totals equal the sum over regions.
    auto flat = hierarchy::flatten(snap);
    for (int g = 0; g < 4; ++g) {
      int total = 0;
      for (const auto* element : flat) {
        if (features::classify_element_groups(*element).contains(
                static_cast<ElementGroup>(g))) {
          ++total;
        }
      }
      double by_region = fv.values[g * 3] + fv.values[g * 3 + 1] + fv.values[g * 3 + 2];
      CHECK(by_region == total);
    }
  }
}

TEST_CASE("dataset CSV round-trips exactly") {
  std::mt19937_64 rng(42);
  LabeledDataset dataset;
  for (int i = 0; i < 80; ++i) {
    Instance instance;
    for (int j = 0; j < features::kFeatureCount - 1; ++j) {
      instance.features[j] = static_cast<double>(rng() % 40);
    }
    instance.features[14] = static_cast<double>(rng() % 2);
    instance.label = static_cast<ActivityType>(rng() % kActivityTypeCount);
    dataset.instances.push_back(instance);
  }
  // A fractional value exercises the shortest-round-trip formatting.
  dataset.instances[0].features[3] = 0.1 + 0.2;

  std::string csv = write_dataset_csv(dataset);
  LabeledDataset reread = read_dataset_csv(csv);
  CHECK(reread == dataset);
  CHECK(write_dataset_csv(reread) == csv);
}

TEST_CASE("dataset CSV errors carry the row number") {
  std::string header;
  for (const auto& name : features::feature_names()) header += name + ",";
  header += "label\n";

  std::string short_row = header + "1,2,3\n";
  CHECK_THROWS_WITH_AS(read_dataset_csv(short_row), doctest::Contains("row 2"),
                       std::runtime_error);

  std::string bad_label =
      header + "0,0,0,0,0,0,0,0,0,0,0,0,1,0,0,Mail\n0,0,0,0,0,0,0,0,0,0,0,0,1,0,0,Bogus\n";
  CHECK_THROWS_WITH_AS(read_dataset_csv(bad_label), doctest::Contains("row 3"),
                       std::runtime_error);

  std::string good = header + "0,0,0,0,0,0,0,0,0,0,0,0,1,0,0,Login\n";
  LabeledDataset dataset = read_dataset_csv(good);
  REQUIRE(dataset.size() == 1);
  CHECK(dataset.instances[0].label == ActivityType::Login);
}

TEST_CASE("activity type names round-trip") {
  for (ActivityType type : all_activity_types()) {
    CHECK(activity_type_from_string(to_string(type)) == type);
  }
  CHECK_FALSE(activity_type_from_string("login").has_value());  // case-sensitive
}
