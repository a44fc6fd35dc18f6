#pragma once

#include <string>
#include <string_view>
#include <utility>

namespace palace::index {

/// Porter (1980) suffix-stripping stemmer for lowercase ASCII words, following
/// the published rule tables. Words of length <= 2 are returned unchanged.
class PorterStemmer {
 public:
  std::string stem(std::string_view input) const {
    std::string w(input);
    if (w.size() <= 2) return w;
    step1a(w);
    step1b(w);
    step1c(w);
    step2(w);
    step3(w);
    step4(w);
    step5(w);
    return w;
  }

 private:
  struct Rule {
    std::string_view suffix;
    std::string_view replacement;
  };

  static bool consonant(const std::string& w, std::size_t i) {
    switch (w[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u':
        return false;
      case 'y':
        return i == 0 || !consonant(w, i - 1);
      default:
        return true;
    }
  }

  /// m in [C](VC)^m[V] over w[0, len).
  static int measure(const std::string& w, std::size_t len) {
    int m = 0;
    std::size_t i = 0;
    while (i < len && consonant(w, i)) ++i;
    while (i < len) {
      while (i < len && !consonant(w, i)) ++i;
      if (i >= len) break;
      while (i < len && consonant(w, i)) ++i;
      ++m;
    }
    return m;
  }

  static bool has_vowel(const std::string& w, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
      if (!consonant(w, i)) return true;
    }
    return false;
  }

  static bool double_consonant(const std::string& w, std::size_t len) {
    return len >= 2 && w[len - 1] == w[len - 2] && consonant(w, len - 1);
  }

  /// *o: stem ends consonant-vowel-consonant, final consonant not w, x or y.
  static bool cvc(const std::string& w, std::size_t len) {
    if (len < 3) return false;
    if (!consonant(w, len - 1) || consonant(w, len - 2) || !consonant(w, len - 3)) return false;
    const char c = w[len - 1];
    return c != 'w' && c != 'x' && c != 'y';
  }

  static bool ends_with(const std::string& w, std::string_view suffix) {
    return w.size() >= suffix.size() &&
           std::string_view(w).substr(w.size() - suffix.size()) == suffix;
  }

  static void replace_suffix(std::string& w, std::size_t suffix_len, std::string_view repl) {
    w.resize(w.size() - suffix_len);
    w += repl;
  }

  template <std::size_t N>
  static const Rule* longest_match(const std::string& w, const Rule (&rules)[N]) {
    const Rule* best = nullptr;
    for (const auto& r : rules) {
      if (ends_with(w, r.suffix) && (!best || r.suffix.size() > best->suffix.size())) best = &r;
    }
    return best;
  }

  static void step1a(std::string& w) {
    if (ends_with(w, "sses")) {
      replace_suffix(w, 4, "ss");
    } else if (ends_with(w, "ies")) {
      replace_suffix(w, 3, "i");
    } else if (ends_with(w, "ss")) {
      // unchanged
    } else if (ends_with(w, "s")) {
      w.pop_back();
    }
  }

  static void step1b(std::string& w) {
    if (ends_with(w, "eed")) {
      if (measure(w, w.size() - 3) > 0) w.pop_back();
      return;
    }
    std::size_t cut = 0;
    if (ends_with(w, "ed") && has_vowel(w, w.size() - 2)) {
      cut = 2;
    } else if (ends_with(w, "ing") && has_vowel(w, w.size() - 3)) {
      cut = 3;
    }
    if (cut == 0) return;
    w.resize(w.size() - cut);
    if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
      w += 'e';
    } else if (double_consonant(w, w.size())) {
      const char c = w.back();
      if (c != 'l' && c != 's' && c != 'z') w.pop_back();
    } else if (measure(w, w.size()) == 1 && cvc(w, w.size())) {
      w += 'e';
    }
  }

  static void step1c(std::string& w) {
    if (ends_with(w, "y") && has_vowel(w, w.size() - 1)) w.back() = 'i';
  }

  static void step2(std::string& w) {
    static constexpr Rule rules[] = {
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},   {"anci", "ance"},
        {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},     {"entli", "ent"},
        {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
        {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
        {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
    };
    apply_measured(w, longest_match(w, rules), 0);
  }

  static void step3(std::string& w) {
    static constexpr Rule rules[] = {
        {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
        {"ical", "ic"},  {"ful", ""},   {"ness", ""},
    };
    apply_measured(w, longest_match(w, rules), 0);
  }

  static void step4(std::string& w) {
    static constexpr Rule rules[] = {
        {"al", ""},   {"ance", ""}, {"ence", ""}, {"er", ""},  {"ic", ""},   {"able", ""},
        {"ible", ""}, {"ant", ""},  {"ement", ""}, {"ment", ""}, {"ent", ""}, {"ion", ""},
        {"ou", ""},   {"ism", ""},  {"ate", ""},  {"iti", ""}, {"ous", ""},  {"ive", ""},
        {"ize", ""},
    };
    const Rule* r = longest_match(w, rules);
    if (!r) return;
    const std::size_t stem_len = w.size() - r->suffix.size();
    if (r->suffix == "ion") {
      if (stem_len == 0 || (w[stem_len - 1] != 's' && w[stem_len - 1] != 't')) return;
    }
    if (measure(w, stem_len) > 1) w.resize(stem_len);
  }

  static void step5(std::string& w) {
    if (ends_with(w, "e")) {
      const std::size_t stem_len = w.size() - 1;
      const int m = measure(w, stem_len);
      if (m > 1 || (m == 1 && !cvc(w, stem_len))) w.pop_back();
    }
    if (measure(w, w.size()) > 1 && double_consonant(w, w.size()) && w.back() == 'l') {
      w.pop_back();
    }
  }

  static void apply_measured(std::string& w, const Rule* r, int min_measure_exclusive) {
    if (!r) return;
    const std::size_t stem_len = w.size() - r->suffix.size();
    if (measure(w, stem_len) > min_measure_exclusive) replace_suffix(w, r->suffix.size(), r->replacement);
  }
};

}  // namespace palace::index
