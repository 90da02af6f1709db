#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "appcheck/hierarchy.hpp"

namespace appcheck::features {
enum class ElementGroup : int;
}

namespace appcheck::lexicon {

/// Associative words for one element role, e.g. the close button of an
/// advertisement. Words are lowercase and unique.
struct KeywordList {
  std::string role;
  std::vector<std::string> words;

  bool operator==(const KeywordList&) const = default;
};

/// Role -> keyword list map. The built-in lists are always present; a user
/// config may extend the map or override individual lists.
class Lexicon {
 public:
  static Lexicon builtin();

  /// Parses a lexicon config (JSON, see docs/formats.md) on top of the
  /// built-ins. Words are lowercased and de-duplicated; empty lists are
  /// rejected.
  static Lexicon from_json(const std::string& text);
  static Lexicon from_file(const std::string& path);

  bool has_role(const std::string& role) const;

  /// Throws std::out_of_range for unknown roles.
  const KeywordList& list(const std::string& role) const;

  std::vector<std::string> roles() const;

 private:
  std::map<std::string, KeywordList> lists_;
};

/// Splits a resource identifier into lowercase tokens: the "package:id/"
/// prefix is dropped, then the remainder is split on non-alphanumeric
/// characters and on lowercase-to-uppercase camel-case boundaries.
std::vector<std::string> tokenize_resource_id(const std::string& resource_id);

/// Whole-token matching: true iff the token set of resource_id intersects the
/// word list. ("notification" does not match the word "no".)
bool matches(const std::string& resource_id, const KeywordList& list);

/// All elements whose resource_id matches the role's list, in pre-order.
/// When require_group is given, elements outside that group are filtered out.
/// Throws std::out_of_range for unknown roles.
std::vector<const hierarchy::UiElement*> resolve(
    const hierarchy::ScreenSnapshot& snapshot, const Lexicon& lexicon,
    const std::string& role,
    std::optional<features::ElementGroup> require_group = std::nullopt);

}  // namespace appcheck::lexicon
