#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace palace::text {

/// Decodes one UTF-8 code point starting at `pos`, advancing `pos`.
/// Invalid bytes decode as U+FFFD and consume a single byte.
inline char32_t next_code_point(std::string_view s, std::size_t& pos) {
  const auto lead = static_cast<unsigned char>(s[pos]);
  std::size_t len = 1;
  char32_t cp = lead;
  if (lead >= 0xF0 && lead < 0xF8) {
    len = 4;
    cp = lead & 0x07;
  } else if (lead >= 0xE0) {
    len = 3;
    cp = lead & 0x0F;
  } else if (lead >= 0xC0) {
    len = 2;
    cp = lead & 0x1F;
  } else if (lead >= 0x80) {
    ++pos;
    return 0xFFFD;
  }
  if (len > 1) {
    if (pos + len > s.size()) {
      ++pos;
      return 0xFFFD;
    }
    for (std::size_t i = 1; i < len; ++i) {
      const auto c = static_cast<unsigned char>(s[pos + i]);
      if ((c & 0xC0) != 0x80) {
        ++pos;
        return 0xFFFD;
      }
      cp = (cp << 6) | (c & 0x3F);
    }
  }
  pos += len;
  return cp;
}

inline std::size_t code_point_count(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < s.size(); ++n) next_code_point(s, pos);
  return n;
}

/// Byte offset of the `n`-th code point (or s.size() when shorter).
inline std::size_t code_point_offset(std::string_view s, std::size_t n) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n && pos < s.size(); ++i) next_code_point(s, pos);
  return pos;
}

/// Keeps at most `max_chars` code points; never splits a multi-byte sequence.
inline std::string truncate_chars(std::string_view s, std::size_t max_chars) {
  return std::string(s.substr(0, code_point_offset(s, max_chars)));
}

inline std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline bool is_ascii_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

inline std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(s.substr(start));
      break;
    }
    lines.push_back(s.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

/// First sentence of `s`: text up to and including the first '.', '!' or '?'
/// that is followed by whitespace or end of text, or up to the first newline.
inline std::string first_sentence(std::string_view s) {
  s = trim(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '\n') return std::string(trim(s.substr(0, i)));
    if (c == '.' || c == '!' || c == '?') {
      if (i + 1 == s.size() || std::isspace(static_cast<unsigned char>(s[i + 1]))) {
        return std::string(s.substr(0, i + 1));
      }
    }
  }
  return std::string(s);
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace palace::text
