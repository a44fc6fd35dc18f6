#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace palace::json_extract {

using nlohmann::json;

/// End (one past the closing brace) of the brace-balanced span starting at
/// `open`, honouring JSON string quoting; npos if unbalanced.
inline std::size_t balanced_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

/// Every top-level well-formed JSON object embedded in free text, in order
/// of appearance. A '{' that does not open a parseable object is skipped.
inline std::vector<json> objects(std::string_view s) {
  std::vector<json> out;
  std::size_t i = 0;
  while ((i = s.find('{', i)) != std::string_view::npos) {
    const auto end = balanced_end(s, i);
    if (end != std::string_view::npos) {
      auto parsed = json::parse(s.substr(i, end - i), nullptr, false);
      if (!parsed.is_discarded() && parsed.is_object()) {
        out.push_back(std::move(parsed));
        i = end;
        continue;
      }
    }
    ++i;
  }
  return out;
}

inline std::optional<json> first_object(std::string_view s) {
  std::size_t i = 0;
  while ((i = s.find('{', i)) != std::string_view::npos) {
    const auto end = balanced_end(s, i);
    if (end != std::string_view::npos) {
      auto parsed = json::parse(s.substr(i, end - i), nullptr, false);
      if (!parsed.is_discarded() && parsed.is_object()) return parsed;
    }
    ++i;
  }
  return std::nullopt;
}

}  // namespace palace::json_extract
