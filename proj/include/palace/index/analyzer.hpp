#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "palace/index/porter.hpp"

namespace palace::index {

/// okapi: lowercase + split on non-alphanumerics.
/// fts: okapi, then stopword removal and Porter stemming.
enum class Analyzer { okapi, fts };

inline std::string_view to_string(Analyzer a) { return a == Analyzer::okapi ? "okapi" : "fts"; }

/// English stopwords (the ranks.nl / Snowball list, contraction entries
/// omitted since the splitter never produces them).
inline const std::unordered_set<std::string_view>& stopwords() {
  static const std::unordered_set<std::string_view> words = {
      "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any",
      "are", "as", "at", "be", "because", "been", "before", "being", "below", "between",
      "both", "but", "by", "cannot", "could", "did", "do", "does", "doing", "down", "during",
      "each", "few", "for", "from", "further", "had", "has", "have", "having", "he", "her",
      "here", "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into",
      "is", "it", "its", "itself", "me", "more", "most", "my", "myself", "no", "nor", "not",
      "of", "off", "on", "once", "only", "or", "other", "ought", "our", "ours", "ourselves",
      "out", "over", "own", "same", "she", "should", "so", "some", "such", "than", "that",
      "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they",
      "this", "those", "through", "to", "too", "under", "until", "up", "very", "was", "we",
      "were", "what", "when", "where", "which", "while", "who", "whom", "why", "with",
      "would", "you", "your", "yours", "yourself", "yourselves",
  };
  return words;
}

/// Bytes >= 0x80 count as word characters so UTF-8 words stay intact.
inline std::vector<std::string> split_terms(std::string_view text) {
  std::vector<std::string> terms;
  std::string cur;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      terms.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) terms.push_back(std::move(cur));
  return terms;
}

inline std::vector<std::string> tokenize_for_index(std::string_view text, Analyzer variant) {
  auto terms = split_terms(text);
  if (variant == Analyzer::okapi) return terms;
  static const PorterStemmer stemmer;
  std::vector<std::string> out;
  out.reserve(terms.size());
  for (auto& t : terms) {
    if (stopwords().contains(t)) continue;
    out.push_back(stemmer.stem(t));
  }
  return out;
}

}  // namespace palace::index
