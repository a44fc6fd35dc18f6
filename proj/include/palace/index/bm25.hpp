#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "palace/error.hpp"
#include "palace/index/analyzer.hpp"

namespace palace::index {

struct ScoredDoc {
  std::uint32_t doc = 0;
  double score = 0.0;

  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Descending score, ascending doc id on ties.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc < b.doc;
}

inline double idf(std::size_t doc_count, std::size_t doc_freq) {
  const auto n = static_cast<double>(doc_count);
  const auto df = static_cast<double>(doc_freq);
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

/// Term -> idf over a tokenized corpus (document frequency, not term frequency).
inline std::unordered_map<std::string, double> idf_table(
    std::span<const std::vector<std::string>> docs) {
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& doc : docs) {
    std::unordered_set<std::string_view> seen(doc.begin(), doc.end());
    for (const auto term : seen) ++df[std::string(term)];
  }
  std::unordered_map<std::string, double> table;
  table.reserve(df.size());
  for (const auto& [term, count] : df) table.emplace(term, idf(docs.size(), count));
  return table;
}

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
};

class Bm25Index {
 public:
  struct Posting {
    std::uint32_t doc;
    std::uint32_t tf;
  };

  Bm25Index() = default;

  Bm25Index(std::span<const std::string> documents, Analyzer variant, Bm25Params params = {})
      : variant_(variant), params_(params) {
    std::vector<std::vector<std::string>> tokenized;
    tokenized.reserve(documents.size());
    for (const auto& d : documents) tokenized.push_back(tokenize_for_index(d, variant));
    build(tokenized);
  }

  Bm25Index(std::span<const std::vector<std::string>> tokenized, Analyzer variant,
            Bm25Params params = {})
      : variant_(variant), params_(params) {
    build(tokenized);
  }

  std::size_t doc_count() const { return doc_lens_.size(); }
  double avg_doc_len() const { return avg_doc_len_; }
  std::span<const std::uint32_t> doc_lens() const { return doc_lens_; }
  Analyzer variant() const { return variant_; }
  const Bm25Params& params() const { return params_; }

  std::span<const Posting> postings(const std::string& term) const {
    const auto it = postings_.find(term);
    if (it == postings_.end()) return {};
    return it->second;
  }

  double term_idf(const std::string& term) const {
    return idf(doc_count(), postings(term).size());
  }

  /// Okapi BM25 of an already-analyzed query against one document.
  double score(std::span<const std::string> query_terms, std::uint32_t doc_id) const {
    if (doc_id >= doc_count()) {
      throw Error(ErrorKind::not_found, "bm25_score: unknown doc_id " + std::to_string(doc_id));
    }
    double total = 0.0;
    for (const auto& term : query_terms) {
      const auto plist = postings(term);
      const auto it = std::lower_bound(plist.begin(), plist.end(), doc_id,
                                       [](const Posting& p, std::uint32_t d) { return p.doc < d; });
      if (it == plist.end() || it->doc != doc_id) continue;
      total += idf(doc_count(), plist.size()) * saturate(it->tf, doc_lens_[doc_id]);
    }
    return total;
  }

  /// Top-k documents with positive score.
  std::vector<ScoredDoc> search(std::string_view query, std::size_t k) const {
    return search_terms(tokenize_for_index(query, variant_), k);
  }

  std::vector<ScoredDoc> search_terms(std::span<const std::string> query_terms,
                                      std::size_t k) const {
    std::unordered_map<std::uint32_t, double> acc;
    for (const auto& term : query_terms) {
      const auto plist = postings(term);
      if (plist.empty()) continue;
      const double w = idf(doc_count(), plist.size());
      for (const auto& p : plist) acc[p.doc] += w * saturate(p.tf, doc_lens_[p.doc]);
    }
    std::vector<ScoredDoc> hits;
    hits.reserve(acc.size());
    for (const auto& [doc, s] : acc) {
      if (s > 0.0) hits.push_back({doc, s});
    }
    const auto keep = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                      ranks_before);
    hits.resize(keep);
    return hits;
  }

 private:
  void build(std::span<const std::vector<std::string>> tokenized) {
    if (params_.k1 <= 0.0) throw Error(ErrorKind::config, "bm25 k1 must be > 0");
    if (params_.b < 0.0 || params_.b > 1.0) throw Error(ErrorKind::config, "bm25 b must be in [0,1]");
    doc_lens_.reserve(tokenized.size());
    double total = 0.0;
    for (std::uint32_t d = 0; d < tokenized.size(); ++d) {
      const auto& terms = tokenized[d];
      doc_lens_.push_back(static_cast<std::uint32_t>(terms.size()));
      total += static_cast<double>(terms.size());
      std::unordered_map<std::string_view, std::uint32_t> tf;
      for (const auto& t : terms) ++tf[t];
      for (const auto& [term, count] : tf) postings_[std::string(term)].push_back({d, count});
    }
    avg_doc_len_ = tokenized.empty() ? 0.0 : total / static_cast<double>(tokenized.size());
  }

  double saturate(std::uint32_t tf, std::uint32_t doc_len) const {
    const double f = tf;
    const double len_norm =
        avg_doc_len_ > 0.0 ? 1.0 - params_.b + params_.b * (doc_len / avg_doc_len_) : 1.0;
    return f * (params_.k1 + 1.0) / (f + params_.k1 * len_norm);
  }

  Analyzer variant_ = Analyzer::okapi;
  Bm25Params params_;
  std::vector<std::uint32_t> doc_lens_;
  double avg_doc_len_ = 0.0;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
};

}  // namespace palace::index
