#pragma once

#include <array>
#include <string>

#include "appcheck/hierarchy.hpp"
#include "appcheck/lexicon.hpp"

namespace appcheck::features {

/// Vertical screen thirds under the 20%-60%-20% split, assigned by the
/// vertical center of an element's bounds.
enum class ScreenRegion : int { Top = 0, Middle = 1, Bottom = 2 };

/// Interactive element categories. An element may belong to several groups
/// at once (e.g. clickable and scrollable), or to none.
enum class ElementGroup : int {
  Clickable = 0,
  HorizontalSwipeable = 1,
  VerticalSwipeable = 2,
  TextField = 3,
};

inline constexpr int kFeatureCount = 15;

struct GroupSet {
  bool clickable = false;
  bool horizontal_swipeable = false;
  bool vertical_swipeable = false;
  bool text_field = false;

  bool contains(ElementGroup group) const {
    switch (group) {
      case ElementGroup::Clickable: return clickable;
      case ElementGroup::HorizontalSwipeable: return horizontal_swipeable;
      case ElementGroup::VerticalSwipeable: return vertical_swipeable;
      case ElementGroup::TextField: return text_field;
    }
    return false;
  }

  bool operator==(const GroupSet&) const = default;
};

/// The 15-feature screen summary:
///   [0..11]  counts per (group, region) cell, laid out group-major:
///            clickable top/middle/bottom, h-swipeable t/m/b,
///            v-swipeable t/m/b, text field t/m/b
///   [12]     total element count, layout containers included
///   [13]     long-clickable element count
///   [14]     navigation drawer flag (0 or 1)
struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  static int index_of(ElementGroup group, ScreenRegion region) {
    return static_cast<int>(group) * 3 + static_cast<int>(region);
  }

  double& cell(ElementGroup group, ScreenRegion region) {
    return values[index_of(group, region)];
  }
  double cell(ElementGroup group, ScreenRegion region) const {
    return values[index_of(group, region)];
  }
  double element_count() const { return values[12]; }
  double long_clickable_count() const { return values[13]; }
  double drawer_flag() const { return values[14]; }

  bool operator==(const FeatureVector&) const = default;
};

/// Stable machine-readable feature names, index-aligned with FeatureVector.
const std::array<std::string, kFeatureCount>& feature_names();

ScreenRegion assign_region(const hierarchy::UiElement& element, int screen_height);

GroupSet classify_element_groups(const hierarchy::UiElement& element);

/// True iff the screen contains a DrawerLayout-class element, or any
/// clickable element whose resource id token-matches the drawer word list.
bool detect_drawer(const hierarchy::ScreenSnapshot& snapshot,
                   const lexicon::Lexicon& lexicon);

FeatureVector extract_features(const hierarchy::ScreenSnapshot& snapshot,
                               const lexicon::Lexicon& lexicon);

}  // namespace appcheck::features
