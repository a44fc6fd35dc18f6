#pragma once

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "palace/error.hpp"
#include "palace/index/bm25.hpp"
#include "palace/index/layers.hpp"
#include "palace/search/ranked_list.hpp"
#include "palace/util/text.hpp"

namespace palace::search {

inline constexpr std::size_t kDefaultSnippetChars = 1200;

inline std::string verbatim_snippet(const index::LayerIndexes& idx, std::uint32_t exchange,
                                    std::size_t truncate_chars = kDefaultSnippetChars) {
  return text::truncate_chars(idx.exchanges()[exchange].text(), truncate_chars);
}

inline std::vector<std::string> candidate_snippets(const RankedList& list, const index::LayerIndexes& idx,
                                                   std::size_t truncate_chars = kDefaultSnippetChars) {
  std::vector<std::string> out;
  out.reserve(list.size());
  for (const auto& e : list.entries) out.push_back(verbatim_snippet(idx, e.exchange, truncate_chars));
  return out;
}

/// BM25-Okapi of the query against each snippet, with IDF taken over the
/// candidate snippets themselves.
inline std::vector<double> snippet_bm25(const std::string& query, const std::vector<std::string>& snippets) {
  const index::Bm25Index bm25(std::span<const std::string>(snippets), index::Analyzer::okapi);
  const auto terms = index::tokenize_for_index(query, index::Analyzer::okapi);
  std::vector<double> out(snippets.size());
  for (std::uint32_t i = 0; i < snippets.size(); ++i) out[i] = bm25.score(terms, i);
  return out;
}

inline std::vector<double> minmax(const std::vector<double>& v) {
  std::vector<double> out(v.size(), 1.0);
  if (v.empty()) return out;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*hi > *lo) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / (*hi - *lo);
  }
  return out;
}

/// Blends the normalized retrieval score with normalized snippet BM25 and
/// re-sorts; equal blended scores keep their original order.
inline RankedList rerank_bm25_snippet(const RankedList& candidates, const std::string& query,
                                      const std::vector<std::string>& snippets, double lambda) {
  if (lambda < 0.0 || lambda > 1.0) throw Error(ErrorKind::config, "rerank lambda must be in [0,1]");
  if (snippets.size() != candidates.size()) throw Error(ErrorKind::config, "one snippet per candidate required");
  RankedList out = candidates;
  if (candidates.empty()) return out;
  std::vector<double> original;
  for (const auto& e : candidates.entries) original.push_back(e.score);
  const auto orig_n = minmax(original);
  const auto bm25_n = minmax(snippet_bm25(query, snippets));
  std::vector<double> blended(original.size());
  for (std::size_t i = 0; i < blended.size(); ++i) blended[i] = lambda * orig_n[i] + (1.0 - lambda) * bm25_n[i];
  std::vector<std::size_t> order(blended.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return blended[a] > blended[b]; });
  for (std::size_t r = 0; r < order.size(); ++r) {
    out.entries[r] = candidates.entries[order[r]];
    out.entries[r].score = blended[order[r]];
    out.entries[r].rank = static_cast<int>(r + 1);
  }
  return out;
}

inline RankedList rerank_bm25_snippet(const RankedList& candidates, const std::string& query,
                                      const index::LayerIndexes& idx, double lambda,
                                      std::size_t truncate_chars = kDefaultSnippetChars) {
  return rerank_bm25_snippet(candidates, query, candidate_snippets(candidates, idx, truncate_chars), lambda);
}

struct GateFeatures {
  double original_top_score = 0.0;
  double margin_1_2 = 0.0;
  double bm25_of_rank1 = 0.0;
  double query_term_overlap_fraction = 0.0;
};

inline GateFeatures gate_features(const std::string& query, const RankedList& candidates,
                                  const std::vector<std::string>& snippets) {
  if (candidates.empty()) throw Error(ErrorKind::config, "gate_features needs at least one candidate");
  GateFeatures f;
  f.original_top_score = candidates.entries[0].score;
  if (candidates.size() > 1) f.margin_1_2 = candidates.entries[0].score - candidates.entries[1].score;
  f.bm25_of_rank1 = snippet_bm25(query, snippets)[0];
  const auto q = index::tokenize_for_index(query, index::Analyzer::okapi);
  const std::set<std::string> qset(q.begin(), q.end());
  const auto s = index::tokenize_for_index(snippets[0], index::Analyzer::okapi);
  const std::set<std::string> sset(s.begin(), s.end());
  if (!qset.empty()) {
    std::size_t hit = 0;
    for (const auto& t : qset) hit += sset.count(t);
    f.query_term_overlap_fraction = static_cast<double>(hit) / static_cast<double>(qset.size());
  }
  return f;
}

}  // namespace palace::search
