#pragma once

#include <cctype>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "palace/corpus/types.hpp"
#include "palace/distill/files.hpp"
#include "palace/distill/types.hpp"
#include "palace/index/analyzer.hpp"
#include "palace/index/bm25.hpp"
#include "palace/util/text.hpp"

namespace palace::distill {

inline constexpr std::size_t kFallbackCoreChars = 240;

/// Document frequencies over the verbatim text of a corpus of exchanges.
class CorpusIdf {
 public:
  CorpusIdf() = default;

  explicit CorpusIdf(std::span<const corpus::Exchange> exchanges) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(exchanges.size());
    for (const auto& ex : exchanges) docs.push_back(index::split_terms(ex.text()));
    n_docs_ = docs.size();
    table_ = index::idf_table(docs);
  }

  /// Terms never seen in the corpus get the df = 0 value.
  double operator()(const std::string& term) const {
    const auto it = table_.find(term);
    return it != table_.end() ? it->second : index::idf(n_docs_, 0);
  }

  std::size_t doc_count() const { return n_docs_; }

 private:
  std::size_t n_docs_ = 0;
  std::unordered_map<std::string, double> table_;
};

struct RarestToken {
  std::string term;
  std::string line;
  std::size_t offset_in_line = 0;
};

/// Highest-IDF okapi token of the exchange text; earliest occurrence wins ties.
inline std::optional<RarestToken> rarest_token(std::string_view text, const CorpusIdf& idf) {
  std::optional<RarestToken> best;
  double best_idf = -1.0;
  for (const auto line : text::split_lines(text)) {
    std::size_t i = 0;
    while (i < line.size()) {
      const auto c = static_cast<unsigned char>(line[i]);
      if (!(c >= 0x80 || std::isalnum(c))) {
        ++i;
        continue;
      }
      const std::size_t start = i;
      while (i < line.size() &&
             (static_cast<unsigned char>(line[i]) >= 0x80 ||
              std::isalnum(static_cast<unsigned char>(line[i])))) {
        ++i;
      }
      const auto term = text::to_lower_ascii(line.substr(start, i - start));
      const double w = idf(term);
      if (w > best_idf) {
        best_idf = w;
        best = RarestToken{term, std::string(line), start};
      }
    }
  }
  return best;
}

/// The line holding the token, cut to a window of at most `max_chars` code
/// points that still contains the token.
inline std::string context_window(const RarestToken& tok, std::size_t max_chars) {
  const std::string_view line = text::trim(tok.line);
  if (text::code_point_count(line) <= max_chars) return std::string(line);
  std::string_view full = tok.line;
  std::size_t start = tok.offset_in_line > 80 ? tok.offset_in_line - 80 : 0;
  while (start > 0 && (static_cast<unsigned char>(full[start]) & 0xC0) == 0x80) --start;
  return std::string(text::trim(text::truncate_chars(full.substr(start), max_chars)));
}

/// Deterministic stand-in for the LLM distiller. Pure in (exchange, idf).
/// Leaves distill_text and token_len to finalize_object.
inline DistilledObject fallback_distill(const corpus::Exchange& ex, const CorpusIdf& idf) {
  DistilledObject obj;
  const corpus::Message* first_user = nullptr;
  const corpus::Message* last_assistant = nullptr;
  for (const auto& m : ex.messages) {
    if (m.role == corpus::Role::user && first_user == nullptr) first_user = &m;
    if (m.role == corpus::Role::assistant && !m.is_tool_only) last_assistant = &m;
  }
  std::string core = first_user ? text::first_sentence(first_user->text) : std::string();
  if (last_assistant != nullptr) {
    const auto reply = text::first_sentence(last_assistant->text);
    if (!reply.empty() && reply != core) core = core.empty() ? reply : core + " " + reply;
  }
  obj.exchange_core = text::truncate_chars(core, kFallbackCoreChars);

  const auto full = ex.text();
  if (const auto tok = rarest_token(full, idf)) {
    obj.specific_context = context_window(*tok, kFallbackCoreChars);
    obj.room_assignments.push_back({RoomType::concept_, tok->term, tok->term, 1.0, 0});
  } else {
    obj.room_assignments.push_back({RoomType::concept_, "empty", "empty", 1.0, 0});
  }
  obj.conversation_id = ex.conversation_id;
  obj.project_id = ex.project_id;
  obj.ply_start = ex.ply_start;
  obj.ply_end = ex.ply_end;
  obj.files_touched = extract_files_touched(full);
  for (auto& r : obj.room_assignments) r.room_id = room_id(r.room_type, r.room_key, obj.project_id);
  obj.distill_text = make_distill_text(obj.exchange_core, obj.specific_context);
  return obj;
}

}  // namespace palace::distill
