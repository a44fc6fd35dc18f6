#pragma once

#include <unicode/uchar.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "palace/error.hpp"
#include "palace/util/text.hpp"

namespace palace::corpus {

class TokenizerProvider {
 public:
  virtual ~TokenizerProvider() = default;
  virtual std::string name() const = 0;
  virtual std::size_t count(std::string_view text) const = 0;
};

/// Whitespace-delimited words. Always available.
class WhitespaceTokenizer final : public TokenizerProvider {
 public:
  std::string name() const override { return "whitespace"; }

  std::size_t count(std::string_view text) const override {
    std::size_t n = 0;
    bool in_word = false;
    for (const char c : text) {
      const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
      if (!space && !in_word) ++n;
      in_word = !space;
    }
    return n;
  }
};

namespace detail {

inline bool is_letter(char32_t c) { return (U_GET_GC_MASK(c) & U_GC_L_MASK) != 0; }
inline bool is_number(char32_t c) { return (U_GET_GC_MASK(c) & U_GC_N_MASK) != 0; }
inline bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0; }
inline bool is_newline(char32_t c) { return c == U'\r' || c == U'\n'; }

inline std::string base64_decode(std::string_view in) {
  static constexpr auto table = [] {
    std::array<int, 256> t{};
    t.fill(-1);
    constexpr std::string_view alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    for (std::size_t i = 0; i < alphabet.size(); ++i) {
      t[static_cast<unsigned char>(alphabet[i])] = static_cast<int>(i);
    }
    return t;
  }();
  std::string out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (const char c : in) {
    const int v = table[static_cast<unsigned char>(c)];
    if (v < 0) continue;
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

}  // namespace detail

/// Splits text into the pre-tokenization pieces of the cl100k_base pattern:
///   (?i:'s|'t|'re|'ve|'m|'ll|'d)|[^\r\n\p{L}\p{N}]?\p{L}+|\p{N}{1,3}|
///    ?[^\s\p{L}\p{N}]+[\r\n]*|\s*[\r\n]+|\s+(?!\S)|\s+
/// The alternation is evaluated leftmost-first, exactly as the regex engine would.
inline std::vector<std::string_view> cl100k_pretokenize(std::string_view s) {
  std::vector<char32_t> cps;
  std::vector<std::size_t> offs;
  for (std::size_t pos = 0; pos < s.size();) {
    offs.push_back(pos);
    cps.push_back(text::next_code_point(s, pos));
  }
  offs.push_back(s.size());
  const std::size_t n = cps.size();
  using detail::is_letter, detail::is_newline, detail::is_number, detail::is_space;

  const auto lower = [&](std::size_t i) -> char32_t {
    const char32_t c = cps[i];
    return (c >= U'A' && c <= U'Z') ? c + 32 : c;
  };
  const auto other = [&](std::size_t i) {
    return !is_space(cps[i]) && !is_letter(cps[i]) && !is_number(cps[i]);
  };

  std::vector<std::string_view> pieces;
  std::size_t i = 0;
  while (i < n) {
    std::size_t end = i;
    // contractions
    if (cps[i] == U'\'' && i + 1 < n) {
      const char32_t a = lower(i + 1);
      if (a == U's' || a == U't' || a == U'm' || a == U'd') {
        end = i + 2;
      } else if (i + 2 < n) {
        const char32_t b = lower(i + 2);
        if ((a == U'r' && b == U'e') || (a == U'v' && b == U'e') || (a == U'l' && b == U'l')) {
          end = i + 3;
        }
      }
    }
    // optional non-letter/number/newline prefix, then letters
    if (end == i) {
      std::size_t j = i;
      if (!is_letter(cps[j]) && !is_number(cps[j]) && !is_newline(cps[j]) && j + 1 < n &&
          is_letter(cps[j + 1])) {
        ++j;
      }
      if (is_letter(cps[j])) {
        while (j < n && is_letter(cps[j])) ++j;
        end = j;
      }
    }
    // up to three digits
    if (end == i && is_number(cps[i])) {
      std::size_t j = i;
      while (j < n && j < i + 3 && is_number(cps[j])) ++j;
      end = j;
    }
    // optional space, punctuation run, trailing newlines
    if (end == i) {
      std::size_t j = i;
      if (cps[j] == U' ' && j + 1 < n && other(j + 1)) ++j;
      if (other(j)) {
        while (j < n && other(j)) ++j;
        while (j < n && is_newline(cps[j])) ++j;
        end = j;
      }
    }
    if (end == i && is_space(cps[i])) {
      std::size_t run_end = i;
      while (run_end < n && is_space(cps[run_end])) ++run_end;
      // whitespace up to and including the last newline in the run
      std::size_t last_nl = n;
      for (std::size_t j = i; j < run_end; ++j) {
        if (is_newline(cps[j])) last_nl = j;
      }
      if (last_nl != n) {
        end = last_nl + 1;
      } else if (run_end == n) {
        end = run_end;
      } else if (run_end - i >= 2) {
        end = run_end - 1;  // leave one space to prefix the next word
      } else {
        end = run_end;
      }
    }
    if (end == i) end = i + 1;
    pieces.push_back(s.substr(offs[i], offs[end] - offs[i]));
    i = end;
  }
  return pieces;
}

/// Byte-level BPE with the cl100k_base merge ranks, loaded from a
/// `.tiktoken` rank file (base64 token, space, rank per line).
class Cl100kTokenizer final : public TokenizerProvider {
 public:
  explicit Cl100kTokenizer(const std::filesystem::path& rank_file) {
    std::ifstream in(rank_file);
    if (!in) throw Error(ErrorKind::io, "cannot open rank file " + rank_file.string());
    std::string line;
    while (std::getline(in, line)) {
      const auto sp = line.find(' ');
      if (sp == std::string::npos) continue;
      ranks_.emplace(detail::base64_decode(std::string_view(line).substr(0, sp)),
                     static_cast<std::uint32_t>(std::stoul(line.substr(sp + 1))));
    }
    if (ranks_.size() < 100000) {
      throw Error(ErrorKind::config, "rank file does not look like cl100k_base: " +
                                         rank_file.string());
    }
  }

  std::string name() const override { return "cl100k_base"; }

  std::size_t count(std::string_view text) const override {
    std::size_t n = 0;
    for (const auto piece : cl100k_pretokenize(text)) n += piece_tokens(piece).size();
    return n;
  }

  std::vector<std::uint32_t> encode(std::string_view text) const {
    std::vector<std::uint32_t> ids;
    for (const auto piece : cl100k_pretokenize(text)) {
      for (const auto id : piece_tokens(piece)) ids.push_back(id);
    }
    return ids;
  }

 private:
  static constexpr std::uint32_t kNoRank = std::numeric_limits<std::uint32_t>::max();

  std::uint32_t rank_of(std::string_view bytes) const {
    const auto it = ranks_.find(std::string(bytes));
    return it == ranks_.end() ? kNoRank : it->second;
  }

  std::vector<std::uint32_t> piece_tokens(std::string_view piece) const {
    if (const auto r = rank_of(piece); r != kNoRank) return {r};
    // boundaries[i] is the start byte of part i; the last entry is piece.size()
    std::vector<std::size_t> bounds(piece.size() + 1);
    for (std::size_t i = 0; i <= piece.size(); ++i) bounds[i] = i;
    while (bounds.size() > 2) {
      std::uint32_t best = kNoRank;
      std::size_t best_at = 0;
      for (std::size_t i = 0; i + 2 < bounds.size(); ++i) {
        const auto r = rank_of(piece.substr(bounds[i], bounds[i + 2] - bounds[i]));
        if (r < best) {
          best = r;
          best_at = i;
        }
      }
      if (best == kNoRank) break;
      bounds.erase(bounds.begin() + static_cast<std::ptrdiff_t>(best_at) + 1);
    }
    std::vector<std::uint32_t> ids;
    ids.reserve(bounds.size() - 1);
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
      ids.push_back(rank_of(piece.substr(bounds[i], bounds[i + 1] - bounds[i])));
    }
    return ids;
  }

  std::unordered_map<std::string, std::uint32_t> ranks_;
};

/// Resolves a tokenizer by name. When cl100k_base is requested but its rank
/// file cannot be loaded, returns the whitespace tokenizer and appends a warning.
inline std::shared_ptr<TokenizerProvider> make_tokenizer(
    std::string_view name, const std::filesystem::path& rank_file,
    std::vector<std::string>& warnings) {
  if (name == "whitespace") return std::make_shared<WhitespaceTokenizer>();
  if (name != "cl100k_base") {
    throw Error(ErrorKind::config, "unknown tokenizer '" + std::string(name) + "'");
  }
  try {
    if (rank_file.empty()) throw Error(ErrorKind::config, "no rank file configured");
    return std::make_shared<Cl100kTokenizer>(rank_file);
  } catch (const Error& e) {
    warnings.push_back(std::string("cl100k_base unavailable (") + e.what() +
                       "); using whitespace tokenizer");
    return std::make_shared<WhitespaceTokenizer>();
  }
}

inline std::size_t count_tokens(std::string_view text, const TokenizerProvider& tokenizer) {
  return tokenizer.count(text);
}

}  // namespace palace::corpus
