#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "palace/index/analyzer.hpp"
#include "palace/index/embedding.hpp"
#include "palace/index/layers.hpp"
#include "palace/search/config.hpp"
#include "palace/search/fusion.hpp"
#include "palace/search/ranked_list.hpp"

namespace palace::search {

struct EngineParams {
  std::size_t k = 7;
  std::size_t signal_depth = 0;  // per-signal retrieval depth before fusion; 0 means k
  double rrf_k = 60.0;
  // Verbatim HNSW over chunks fetches this many chunks per wanted exchange.
  std::size_t chunk_oversample = 4;

  std::size_t depth() const { return signal_depth == 0 ? k : signal_depth; }
};

/// A query analyzed once and reused across every configuration. Not shared
/// between threads.
struct PreparedQuery {
  std::string id;
  std::string text;
  std::vector<std::string> okapi_terms;
  std::vector<std::string> fts_terms;
  index::EmbeddingVector vector;
  std::map<SignalKey, std::vector<index::ScoredDoc>> cache;
};

/// Stateless over frozen indexes; safe to share between threads.
class SearchEngine {
 public:
  SearchEngine(const index::LayerIndexes& indexes, EngineParams params = {})
      : indexes_(indexes), params_(params) {}

  const index::LayerIndexes& indexes() const { return indexes_; }
  const EngineParams& params() const { return params_; }

  PreparedQuery prepare(std::string id, std::string text) const {
    PreparedQuery q;
    q.id = std::move(id);
    q.text = std::move(text);
    q.okapi_terms = index::tokenize_for_index(q.text, index::Analyzer::okapi);
    q.fts_terms = index::tokenize_for_index(q.text, index::Analyzer::fts);
    q.vector = index::embed(q.text, indexes_.embedder(), "query " + q.id);
    return q;
  }

  /// One signal's hits, mapped to exchange ids, in ranking order.
  const std::vector<index::ScoredDoc>& signal(PreparedQuery& q, const SignalKey& key) const {
    if (const auto it = q.cache.find(key); it != q.cache.end()) return it->second;
    return q.cache.emplace(key, compute_signal(q, key)).first->second;
  }

  RankedList run(const SearchConfig& config, PreparedQuery& q) const {
    std::vector<std::vector<index::ScoredDoc>> lists;
    lists.reserve(config.signals.size());
    for (const auto& s : config.signals) lists.push_back(signal(q, s));
    RankedList out;
    out.query_id = q.id;
    out.config_id = config.id();
    out.entries = fuse(lists, config.fusion, {.rrf_k = params_.rrf_k, .depth = params_.k});
    return out;
  }

  RankedList search(const SearchConfig& config, std::string query_text, std::string query_id = "q") const {
    auto q = prepare(std::move(query_id), std::move(query_text));
    return run(config, q);
  }

 private:
  std::vector<index::ScoredDoc> compute_signal(const PreparedQuery& q, const SignalKey& key) const {
    const auto& vi = indexes_.view(key.view);
    const auto layer = index::layer_of(key.view);
    const std::size_t depth = params_.depth();
    switch (key.mechanism) {
      case Mechanism::bm25_okapi:
      case Mechanism::bm25_fts: {
        const bool okapi = key.mechanism == Mechanism::bm25_okapi;
        const auto& bm25 = okapi ? vi.okapi : vi.fts;
        auto hits = bm25.search_terms(okapi ? q.okapi_terms : q.fts_terms, bm25.doc_count());
        for (auto& h : hits) h.doc = vi.bm25_doc_exchange[h.doc];
        std::sort(hits.begin(), hits.end(), index::ranks_before);
        if (hits.size() > depth) hits.resize(depth);
        return hits;
      }
      case Mechanism::exact:
      case Mechanism::hnsw: {
        if (!vi.has_vectors) {
          throw Error(ErrorKind::not_found,
                      "no vector index for the " + std::string(index::to_string(layer)) + " layer (" +
                          std::string(index::to_string(key.view)) + ")");
        }
        index::require_layer(vi.exact.store().layer(), layer, "vector search");
        const auto& store = vi.exact.store();
        std::vector<index::ScoredDoc> rows;
        if (key.mechanism == Mechanism::exact) {
          rows = vi.exact.search(q.vector.values, store.count());
        } else {
          const bool chunked = key.view == index::DocView::raw;
          const std::size_t want = std::min(store.count(), chunked ? depth * params_.chunk_oversample : depth);
          const std::size_t ef = std::max<std::size_t>(vi.hnsw.params().ef_search, want);
          rows = vi.hnsw.search(q.vector.values, want, ef);
        }
        return pool_rows(rows, store, depth);
      }
    }
    return {};
  }

  /// Max-pools row hits per exchange label and keeps the top `depth`.
  static std::vector<index::ScoredDoc> pool_rows(const std::vector<index::ScoredDoc>& rows,
                                                 const index::VectorStore& store, std::size_t depth) {
    std::unordered_map<std::uint32_t, double> best;
    for (const auto& r : rows) {
      const auto label = store.label(r.doc);
      const auto [it, inserted] = best.emplace(label, r.score);
      if (!inserted) it->second = std::max(it->second, r.score);
    }
    std::vector<index::ScoredDoc> hits;
    hits.reserve(best.size());
    for (const auto& [label, s] : best) hits.push_back({label, s});
    const auto keep = std::min(depth, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), index::ranks_before);
    hits.resize(keep);
    return hits;
  }

  const index::LayerIndexes& indexes_;
  EngineParams params_;
};

}  // namespace palace::search
