#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "palace/corpus/types.hpp"
#include "palace/distill/distill.hpp"
#include "palace/distill/types.hpp"
#include "palace/index/bm25.hpp"
#include "palace/index/embedding.hpp"
#include "palace/index/layer.hpp"
#include "palace/index/vector_index.hpp"
#include "palace/util/jsonl.hpp"
#include "palace/util/parallel.hpp"
#include "palace/util/text.hpp"

namespace palace::index {

struct ChunkParams {
  std::size_t size = 2000;
  std::size_t overlap = 200;
};

/// Windows of `size` code points advancing by size - overlap; the last window
/// ends at the end of the text. Text that fits in one window is one chunk.
inline std::vector<std::string> chunk_text(std::string_view s, ChunkParams p = {}) {
  if (p.size == 0 || p.overlap >= p.size) throw Error(ErrorKind::config, "chunk overlap must be < size");
  const std::size_t n = text::code_point_count(s);
  if (n <= p.size) return {std::string(s)};
  std::vector<std::string> out;
  const std::size_t step = p.size - p.overlap;
  for (std::size_t start = 0;; start += step) {
    const std::size_t end = std::min(n, start + p.size);
    const auto b = text::code_point_offset(s, start);
    const auto e = text::code_point_offset(s, end);
    out.emplace_back(s.substr(b, e - b));
    if (end == n) break;
  }
  return out;
}

/// Exchanges in (conversation_id, ply_start) order; the position in this
/// store is the exchange's internal id, and id order is ref order.
class ExchangeStore {
 public:
  ExchangeStore() = default;

  explicit ExchangeStore(std::vector<corpus::Exchange> exchanges) : items_(std::move(exchanges)) {
    std::sort(items_.begin(), items_.end(), [](const auto& a, const auto& b) {
      return a.conversation_id != b.conversation_id ? a.conversation_id < b.conversation_id
                                                    : a.ply_start < b.ply_start;
    });
    for (std::uint32_t i = 0; i < items_.size(); ++i) {
      if (!by_ref_.emplace(items_[i].ref(), i).second) {
        throw Error(ErrorKind::malformed_input, "duplicate exchange " + items_[i].ref());
      }
    }
  }

  std::size_t size() const { return items_.size(); }
  const corpus::Exchange& operator[](std::size_t i) const { return items_[i]; }
  std::span<const corpus::Exchange> items() const { return items_; }

  std::optional<std::uint32_t> find(std::string_view ref) const {
    const auto it = by_ref_.find(std::string(ref));
    if (it == by_ref_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::uint32_t> find(std::string_view cid, int ply_start, int ply_end) const {
    return find(std::string(cid) + ":" + std::to_string(ply_start) + "-" + std::to_string(ply_end));
  }

 private:
  std::vector<corpus::Exchange> items_;
  std::unordered_map<std::string, std::uint32_t> by_ref_;
};

enum class DocView { raw, core, core_files, core_rooms, all };

inline std::string_view to_string(DocView v) {
  switch (v) {
    case DocView::raw: return "raw";
    case DocView::core: return "core";
    case DocView::core_files: return "core_files";
    case DocView::core_rooms: return "core_rooms";
    case DocView::all: return "all";
  }
  return "raw";
}

inline Layer layer_of(DocView v) { return v == DocView::raw ? Layer::verbatim : Layer::distilled; }

inline distill::Facets facets_of(DocView v) {
  switch (v) {
    case DocView::core_files: return {.files = true};
    case DocView::core_rooms: return {.rooms = true};
    case DocView::all: return {.files = true, .rooms = true};
    default: return {};
  }
}

/// Views that carry vectors. BM25 exists for every view.
inline constexpr std::array<DocView, 4> kVectorViews = {DocView::raw, DocView::core, DocView::core_files,
                                                        DocView::core_rooms};
inline constexpr std::array<DocView, 5> kAllViews = {DocView::raw, DocView::core, DocView::core_files,
                                                     DocView::core_rooms, DocView::all};

struct IndexSettings {
  ChunkParams chunks;
  HnswParams hnsw;
  Bm25Params bm25;
  std::size_t workers = 4;
};

/// One view's lexical and vector indexes. Vector row labels are exchange ids.
struct ViewIndex {
  DocView view = DocView::raw;
  Bm25Index okapi;
  Bm25Index fts;
  std::vector<std::uint32_t> bm25_doc_exchange;  // bm25 doc id -> exchange id
  bool has_vectors = false;
  ExactIndex exact;
  HnswIndex hnsw;
};

/// Both layers over one exchange store, built then frozen.
class LayerIndexes {
 public:
  LayerIndexes() = default;

  const ExchangeStore& exchanges() const { return exchanges_; }
  std::span<const distill::DistilledObject> objects() const { return objects_; }
  /// Distilled object of an exchange, if any.
  const distill::DistilledObject* object_for(std::uint32_t exchange_id) const {
    const int o = exchange_object_[exchange_id];
    return o < 0 ? nullptr : &objects_[static_cast<std::size_t>(o)];
  }
  const ViewIndex& view(DocView v) const { return views_[static_cast<std::size_t>(v)]; }
  const EmbeddingProvider& embedder() const { return *embedder_; }
  const IndexSettings& settings() const { return settings_; }

  /// Document text of one exchange under a view.
  std::string document(DocView v, std::uint32_t exchange_id) const {
    if (v == DocView::raw) return exchanges_[exchange_id].text();
    const auto* obj = object_for(exchange_id);
    return obj ? distill::build_bm25_document(*obj, facets_of(v)) : std::string();
  }

  /// Embeds everything. Distilled objects whose exchange is unknown are an error.
  static LayerIndexes build(ExchangeStore exchanges, std::vector<distill::DistilledObject> objects,
                            std::shared_ptr<const EmbeddingProvider> embedder, IndexSettings settings = {}) {
    LayerIndexes li = prepare(std::move(exchanges), std::move(objects), std::move(embedder), settings);
    for (const auto v : kVectorViews) li.set_vectors(v, li.embed_view(v));
    return li;
  }

  /// Rebuilds from persisted vectors (BM25 and HNSW graphs are rebuilt in memory).
  static LayerIndexes load(const std::filesystem::path& dir, ExchangeStore exchanges,
                           std::vector<distill::DistilledObject> objects,
                           std::shared_ptr<const EmbeddingProvider> embedder, IndexSettings settings = {}) {
    const auto manifest = nlohmann::json::parse(jsonl::read_text(dir / "index.json"));
    if (manifest.value("dimension", std::size_t{0}) != embedder->dimension()) {
      throw Error(ErrorKind::dimension_mismatch,
                  "index was built with dimension " + manifest["dimension"].dump());
    }
    if (manifest.value("embedder", std::string()) != embedder->name()) {
      throw Error(ErrorKind::config, "index was built with embedder " + manifest.value("embedder", std::string()));
    }
    settings.chunks.size = manifest.at("chunk_size").get<std::size_t>();
    settings.chunks.overlap = manifest.at("chunk_overlap").get<std::size_t>();
    LayerIndexes li = prepare(std::move(exchanges), std::move(objects), std::move(embedder), settings);
    for (const auto v : kVectorViews) {
      auto loaded = load_vectors(dir / vector_file(v));
      require_layer(loaded.store.layer(), layer_of(v), vector_file(v));
      li.settings_.hnsw = loaded.params;
      li.set_vectors(v, std::move(loaded.store));
    }
    if (li.view(DocView::raw).exact.count() != li.expected_raw_rows()) {
      throw Error(ErrorKind::malformed_input, "stored verbatim vectors do not match the exchange store");
    }
    return li;
  }

  void save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto v : kVectorViews) {
      save_vectors(dir / vector_file(v), view(v).exact.store(), VectorKind::hnsw, settings_.hnsw);
    }
    const nlohmann::json manifest = {{"embedder", embedder_->name()},
                                     {"dimension", embedder_->dimension()},
                                     {"chunk_size", settings_.chunks.size},
                                     {"chunk_overlap", settings_.chunks.overlap},
                                     {"hnsw_M", settings_.hnsw.M},
                                     {"hnsw_ef_construction", settings_.hnsw.ef_construction},
                                     {"hnsw_ef_search", settings_.hnsw.ef_search},
                                     {"hnsw_seed", settings_.hnsw.seed},
                                     {"n_exchanges", exchanges_.size()},
                                     {"n_objects", objects_.size()}};
    jsonl::write_text(dir / "index.json", manifest.dump(2) + "\n");
  }

  static std::string vector_file(DocView v) { return "vectors_" + std::string(to_string(v)) + ".palvec"; }

 private:
  static LayerIndexes prepare(ExchangeStore exchanges, std::vector<distill::DistilledObject> objects,
                              std::shared_ptr<const EmbeddingProvider> embedder, const IndexSettings& settings) {
    LayerIndexes li;
    li.exchanges_ = std::move(exchanges);
    li.embedder_ = std::move(embedder);
    li.settings_ = settings;
    std::sort(objects.begin(), objects.end(), [](const auto& a, const auto& b) {
      return a.conversation_id != b.conversation_id ? a.conversation_id < b.conversation_id
                                                    : a.ply_start < b.ply_start;
    });
    li.objects_ = std::move(objects);
    li.exchange_object_.assign(li.exchanges_.size(), -1);
    li.object_exchange_.reserve(li.objects_.size());
    for (std::size_t o = 0; o < li.objects_.size(); ++o) {
      const auto& obj = li.objects_[o];
      const auto id = li.exchanges_.find(obj.conversation_id, obj.ply_start, obj.ply_end);
      if (!id) throw Error(ErrorKind::not_found, "distilled object " + obj.ref() + " has no exchange");
      li.exchange_object_[*id] = static_cast<int>(o);
      li.object_exchange_.push_back(*id);
    }
    for (const auto v : kAllViews) li.build_lexical(v);
    return li;
  }

  void build_lexical(DocView v) {
    auto& vi = views_[static_cast<std::size_t>(v)];
    vi.view = v;
    std::vector<std::string> docs;
    if (v == DocView::raw) {
      for (std::uint32_t i = 0; i < exchanges_.size(); ++i) {
        docs.push_back(exchanges_[i].text());
        vi.bm25_doc_exchange.push_back(i);
      }
    } else {
      for (std::size_t o = 0; o < objects_.size(); ++o) {
        docs.push_back(distill::build_bm25_document(objects_[o], facets_of(v)));
        vi.bm25_doc_exchange.push_back(object_exchange_[o]);
      }
    }
    vi.okapi = Bm25Index(std::span<const std::string>(docs), Analyzer::okapi, settings_.bm25);
    vi.fts = Bm25Index(std::span<const std::string>(docs), Analyzer::fts, settings_.bm25);
  }

  std::size_t expected_raw_rows() const {
    std::size_t n = 0;
    for (const auto& ex : exchanges_.items()) n += chunk_text(ex.text(), settings_.chunks).size();
    return n;
  }

  VectorStore embed_view(DocView v) const {
    std::vector<std::string> texts;
    std::vector<std::uint32_t> labels;
    if (v == DocView::raw) {
      for (std::uint32_t i = 0; i < exchanges_.size(); ++i) {
        for (auto& c : chunk_text(exchanges_[i].text(), settings_.chunks)) {
          texts.push_back(std::move(c));
          labels.push_back(i);
        }
      }
    } else {
      for (std::size_t o = 0; o < objects_.size(); ++o) {
        texts.push_back(distill::build_bm25_document(objects_[o], facets_of(v)));
        labels.push_back(object_exchange_[o]);
      }
    }
    std::vector<EmbeddingVector> vecs(texts.size());
    parallel_for(texts.size(), settings_.workers, [&](std::size_t i) {
      vecs[i] = embed(texts[i], *embedder_, exchanges_[labels[i]].ref());
    });
    VectorStore store(embedder_->dimension(), layer_of(v));
    for (std::size_t i = 0; i < vecs.size(); ++i) store.add(vecs[i].values, labels[i]);
    return store;
  }

  void set_vectors(DocView v, VectorStore store) {
    auto& vi = views_[static_cast<std::size_t>(v)];
    if (store.dimension() != embedder_->dimension()) {
      throw Error(ErrorKind::dimension_mismatch, "vectors for view " + std::string(to_string(v)) +
                                                     " have dimension " + std::to_string(store.dimension()));
    }
    vi.has_vectors = true;
    vi.hnsw = HnswIndex(store, settings_.hnsw);
    vi.exact = ExactIndex(std::move(store));
  }

  ExchangeStore exchanges_;
  std::vector<distill::DistilledObject> objects_;
  std::vector<int> exchange_object_;
  std::vector<std::uint32_t> object_exchange_;
  std::array<ViewIndex, 5> views_;
  std::shared_ptr<const EmbeddingProvider> embedder_;
  IndexSettings settings_;
};

}  // namespace palace::index
