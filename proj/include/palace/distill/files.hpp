#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace palace::distill {

inline constexpr std::size_t kMaxFilesTouched = 20;

namespace detail {

inline bool is_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}
// [A-Za-z0-9_~-]
inline bool is_head(char c) { return is_alnum(c) || c == '_' || c == '~' || c == '-'; }
// [A-Za-z0-9_.~-]
inline bool is_segment(char c) { return is_head(c) || c == '.'; }
// [A-Za-z0-9_-]
inline bool is_stem(char c) { return is_alnum(c) || c == '_' || c == '-'; }

/// Length of a match of [A-Za-z0-9_~-]+(/[A-Za-z0-9_.~-]+)+ at i, or 0.
inline std::size_t match_path(std::string_view s, std::size_t i) {
  std::size_t j = i;
  while (j < s.size() && is_head(s[j])) ++j;
  if (j == i) return 0;
  std::size_t end = 0;
  while (j + 1 < s.size() && s[j] == '/' && is_segment(s[j + 1])) {
    ++j;
    while (j < s.size() && is_segment(s[j])) ++j;
    end = j;
  }
  return end == 0 ? 0 : end - i;
}

/// Length of a match of [A-Za-z0-9_-]+\.[A-Za-z0-9]{1,8} not followed by an
/// alphanumeric, or 0.
inline std::size_t match_filename(std::string_view s, std::size_t i) {
  std::size_t j = i;
  while (j < s.size() && is_stem(s[j])) ++j;
  if (j == i || j >= s.size() || s[j] != '.') return 0;
  const std::size_t ext = ++j;
  while (j < s.size() && is_alnum(s[j])) ++j;
  const std::size_t n = j - ext;
  if (n < 1 || n > 8) return 0;
  return j - i;
}

inline bool has_letter(std::string_view m) {
  return std::any_of(m.begin(), m.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  });
}

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

/// True if the whitespace-delimited token around [begin, end) is a URL.
inline bool inside_url(std::string_view s, std::size_t begin, std::size_t end) {
  std::size_t a = begin;
  while (a > 0 && !is_space(s[a - 1])) --a;
  std::size_t b = end;
  while (b < s.size() && !is_space(s[b])) ++b;
  return s.substr(a, b - a).find("://") != std::string_view::npos;
}

}  // namespace detail

/// Slash-containing paths and bare filenames with an extension, first
/// occurrence order, deduplicated, at most 20. Pure numbers ("3.14",
/// "2024/01/02") and anything inside a URL token are skipped; trailing dots
/// from sentence punctuation are trimmed.
inline std::vector<std::string> extract_files_touched(std::string_view text) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  std::size_t i = 0;
  while (i < text.size() && out.size() < kMaxFilesTouched) {
    std::size_t n = detail::match_path(text, i);
    if (n == 0) n = detail::match_filename(text, i);
    if (n == 0) {
      ++i;
      continue;
    }
    std::string_view m = text.substr(i, n);
    const std::size_t begin = i;
    i += n;
    while (!m.empty() && m.back() == '.') m.remove_suffix(1);
    if (!detail::has_letter(m) || detail::inside_url(text, begin, begin + n)) continue;
    if (m.find('/') == std::string_view::npos && m.find('.') == std::string_view::npos) continue;
    if (seen.emplace(m).second) out.emplace_back(m);
  }
  return out;
}

}  // namespace palace::distill
