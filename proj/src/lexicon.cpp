#include "appcheck/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "appcheck/features.hpp"
#include "json.hpp"

namespace appcheck::lexicon {

namespace {

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

KeywordList make_list(std::string role, std::vector<std::string> words) {
  return KeywordList{std::move(role), std::move(words)};
}

}  // namespace

Lexicon Lexicon::builtin() {
  Lexicon lexicon;
  auto add = [&](std::string role, std::vector<std::string> words) {
    lexicon.lists_[role] = make_list(role, std::move(words));
  };

  // The close and drawer lists are load-bearing for advertisement handling
  // and drawer detection; their contents are pinned by regression tests.
  add("close", {"close", "discard", "shut", "hide", "no"});
  add("drawer", {"drawer", "menu", "sidebar"});

  // Roles used by the scenario programs. Deliberately conservative; override
  // via a lexicon config file when an app uses unusual identifiers.
  add("login_submit", {"login", "signin", "submit"});
  add("username_field", {"username", "user", "email", "account"});
  add("password_field", {"password", "pass", "pwd"});
  add("compose", {"compose", "write"});
  add("send", {"send"});
  add("recipient_field", {"recipient", "to"});
  add("subject_field", {"subject"});
  add("body_field", {"body", "message", "content"});
  add("url_bar", {"url", "address", "search"});
  add("nav_back", {"back"});
  add("nav_forward", {"forward"});
  add("nav_home", {"home"});
  add("new_tab", {"new"});
  add("add_task", {"add", "create", "plus"});
  add("article_item", {"article", "item", "story", "post"});
  add("tab_item", {"tab", "section"});
  return lexicon;
}

Lexicon Lexicon::from_json(const std::string& text) {
  nlohmann::json document;
  try {
    document = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& error) {
    throw std::runtime_error(std::string("lexicon config is not valid JSON: ") +
                             error.what());
  }
  if (!document.is_object()) {
    throw std::runtime_error("lexicon config: expected a JSON object");
  }

  Lexicon lexicon = builtin();
  auto roles_it = document.find("roles");
  if (roles_it == document.end()) return lexicon;
  if (!roles_it->is_object()) {
    throw std::runtime_error("lexicon config: \"roles\" must be an object");
  }
  for (auto it = roles_it->begin(); it != roles_it->end(); ++it) {
    if (!it.value().is_array()) {
      throw std::runtime_error("lexicon config: role \"" + it.key() +
                               "\" must map to an array of words");
    }
    std::vector<std::string> words;
    std::set<std::string> seen;
    for (const auto& word : it.value()) {
      if (!word.is_string()) {
        throw std::runtime_error("lexicon config: role \"" + it.key() +
                                 "\" contains a non-string word");
      }
      std::string lowered = to_lower(word.get<std::string>());
      if (lowered.empty()) {
        throw std::runtime_error("lexicon config: role \"" + it.key() +
                                 "\" contains an empty word");
      }
      if (seen.insert(lowered).second) words.push_back(std::move(lowered));
    }
    if (words.empty()) {
      throw std::runtime_error("lexicon config: role \"" + it.key() +
                               "\" has an empty word list");
    }
    lexicon.lists_[it.key()] = make_list(it.key(), std::move(words));
  }
  return lexicon;
}

Lexicon Lexicon::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon config: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

bool Lexicon::has_role(const std::string& role) const {
  return lists_.count(role) != 0;
}

const KeywordList& Lexicon::list(const std::string& role) const {
  auto it = lists_.find(role);
  if (it == lists_.end()) {
    throw std::out_of_range("unknown lexicon role \"" + role + "\"");
  }
  return it->second;
}

std::vector<std::string> Lexicon::roles() const {
  std::vector<std::string> out;
  out.reserve(lists_.size());
  for (const auto& [role, _] : lists_) out.push_back(role);
  return out;
}

std::vector<std::string> tokenize_resource_id(const std::string& resource_id) {
  std::string body = resource_id;
  size_t prefix = body.find(":id/");
  if (prefix != std::string::npos) body = body.substr(prefix + 4);

  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&]() {
    if (!current.empty()) {
      tokens.push_back(to_lower(current));
      current.clear();
    }
  };
  char previous = '\0';
  for (char c : body) {
    if (!std::isalnum(static_cast<unsigned char>(c))) {
      flush();
    } else {
      if (std::islower(static_cast<unsigned char>(previous)) &&
          std::isupper(static_cast<unsigned char>(c))) {
        flush();  // camel-case boundary
      }
      current.push_back(c);
    }
    previous = c;
  }
  flush();
  return tokens;
}

bool matches(const std::string& resource_id, const KeywordList& list) {
  for (const std::string& token : tokenize_resource_id(resource_id)) {
    if (std::find(list.words.begin(), list.words.end(), token) != list.words.end()) {
      return true;
    }
  }
  return false;
}

std::vector<const hierarchy::UiElement*> resolve(
    const hierarchy::ScreenSnapshot& snapshot, const Lexicon& lexicon,
    const std::string& role, std::optional<features::ElementGroup> require_group) {
  const KeywordList& list = lexicon.list(role);
  std::vector<const hierarchy::UiElement*> out;
  for (const hierarchy::UiElement* element : hierarchy::flatten(snapshot)) {
    if (!matches(element->resource_id, list)) continue;
    if (require_group &&
        !features::classify_element_groups(*element).contains(*require_group)) {
      continue;
    }
    out.push_back(element);
  }
  return out;
}

}  // namespace appcheck::lexicon
