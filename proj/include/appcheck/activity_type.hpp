#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace appcheck {

/// The seven screen categories the workbench knows how to test.
/// The declaration order is the canonical tie-break order used by every
/// classifier and report in the project; do not reorder.
enum class ActivityType : int {
  Splash = 0,
  Advertisement,
  Login,
  Portal,
  Mail,
  Browser,
  TodoList,
};

inline constexpr int kActivityTypeCount = 7;

constexpr std::array<ActivityType, kActivityTypeCount> all_activity_types() {
  return {ActivityType::Splash,   ActivityType::Advertisement,
          ActivityType::Login,    ActivityType::Portal,
          ActivityType::Mail,     ActivityType::Browser,
          ActivityType::TodoList};
}

std::string_view to_string(ActivityType type);

/// Returns nullopt for unknown names. Matching is exact ("Login", not "login").
std::optional<ActivityType> activity_type_from_string(std::string_view name);

}  // namespace appcheck
