#include "appcheck/features.hpp"

#include <stdexcept>

namespace appcheck::features {

const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names = {
      "clickable_top",
      "clickable_middle",
      "clickable_bottom",
      "horizontal_swipeable_top",
      "horizontal_swipeable_middle",
      "horizontal_swipeable_bottom",
      "vertical_swipeable_top",
      "vertical_swipeable_middle",
      "vertical_swipeable_bottom",
      "text_field_top",
      "text_field_middle",
      "text_field_bottom",
      "element_count",
      "long_clickable_count",
      "has_drawer",
  };
  return names;
}

ScreenRegion assign_region(const hierarchy::UiElement& element, int screen_height) {
  if (screen_height <= 0) {
    throw std::invalid_argument("assign_region: screen_height must be positive");
  }
  double center = element.bounds.center_y();
  if (center < 0.2 * screen_height) return ScreenRegion::Top;
  if (center < 0.8 * screen_height) return ScreenRegion::Middle;
  return ScreenRegion::Bottom;
}

GroupSet classify_element_groups(const hierarchy::UiElement& element) {
  GroupSet groups;
  groups.clickable = element.clickable;
  groups.text_field =
      element.editable || hierarchy::class_implies_editable(element.widget_class);
  if (element.scrollable) {
    bool horizontal =
        element.scroll_orientation == hierarchy::ScrollOrientation::Horizontal ||
        hierarchy::orientation_from_class(element.widget_class) ==
            hierarchy::ScrollOrientation::Horizontal;
    groups.horizontal_swipeable = horizontal;
    // Scrollable elements without a horizontal cue default to vertical.
    groups.vertical_swipeable = !horizontal;
  }
  return groups;
}

bool detect_drawer(const hierarchy::ScreenSnapshot& snapshot,
                   const lexicon::Lexicon& lexicon) {
  const lexicon::KeywordList& drawer_words = lexicon.list("drawer");
  for (const hierarchy::UiElement* element : hierarchy::flatten(snapshot)) {
    if (element->widget_class.find("DrawerLayout") != std::string::npos) {
      return true;
    }
    if (element->clickable && lexicon::matches(element->resource_id, drawer_words)) {
      return true;
    }
  }
  return false;
}

FeatureVector extract_features(const hierarchy::ScreenSnapshot& snapshot,
                               const lexicon::Lexicon& lexicon) {
  FeatureVector features;
  for (const hierarchy::UiElement* element : hierarchy::flatten(snapshot)) {
    ScreenRegion region = assign_region(*element, snapshot.screen_height);
    GroupSet groups = classify_element_groups(*element);
    if (groups.clickable) features.cell(ElementGroup::Clickable, region) += 1;
    if (groups.horizontal_swipeable) {
      features.cell(ElementGroup::HorizontalSwipeable, region) += 1;
    }
    if (groups.vertical_swipeable) {
      features.cell(ElementGroup::VerticalSwipeable, region) += 1;
    }
    if (groups.text_field) features.cell(ElementGroup::TextField, region) += 1;
    features.values[12] += 1;
    if (element->long_clickable) features.values[13] += 1;
  }
  features.values[14] = detect_drawer(snapshot, lexicon) ? 1.0 : 0.0;
  return features;
}

}  // namespace appcheck::features
