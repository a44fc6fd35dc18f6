#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "palace/error.hpp"
#include "palace/index/bm25.hpp"
#include "palace/index/layer.hpp"

namespace palace::index {

enum class VectorKind : std::uint8_t { exact = 0, hnsw = 1 };

struct HnswParams {
  std::uint32_t M = 16;
  std::uint32_t ef_construction = 200;
  std::uint32_t ef_search = 100;
  std::uint64_t seed = 42;

  void validate() const {
    if (M < 2) throw Error(ErrorKind::config, "hnsw M must be >= 2");
    if (ef_construction < 1) throw Error(ErrorKind::config, "hnsw ef_construction must be >= 1");
  }
};

/// Row-major float32 vectors plus a label per row. Several rows may share a
/// label (verbatim chunks of one exchange).
class VectorStore {
 public:
  VectorStore() = default;
  VectorStore(std::size_t dimension, Layer layer) : dimension_(dimension), layer_(layer) {}

  void add(std::span<const float> v, std::uint32_t label) {
    if (v.size() != dimension_) {
      throw Error(ErrorKind::dimension_mismatch,
                  "vector of dimension " + std::to_string(v.size()) + " added to index of " +
                      std::to_string(dimension_));
    }
    data_.insert(data_.end(), v.begin(), v.end());
    labels_.push_back(label);
  }

  std::size_t dimension() const { return dimension_; }
  std::size_t count() const { return labels_.size(); }
  Layer layer() const { return layer_; }
  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dimension_, dimension_};
  }
  std::uint32_t label(std::size_t i) const { return labels_[i]; }
  std::span<const float> data() const { return data_; }
  std::span<const std::uint32_t> labels() const { return labels_; }

  void check_query(std::span<const float> q) const {
    if (q.size() != dimension_) {
      throw Error(ErrorKind::dimension_mismatch,
                  "query dimension " + std::to_string(q.size()) + " vs index " +
                      std::to_string(dimension_));
    }
  }

  friend bool operator==(const VectorStore&, const VectorStore&) = default;

 private:
  std::size_t dimension_ = 0;
  Layer layer_ = Layer::verbatim;
  std::vector<float> data_;
  std::vector<std::uint32_t> labels_;
};

inline float dot_f(std::span<const float> a, std::span<const float> b) {
  float s = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Exhaustive cosine similarity over unit vectors. Hits carry row positions.
class ExactIndex {
 public:
  ExactIndex() = default;
  explicit ExactIndex(VectorStore store) : store_(std::move(store)) {}

  const VectorStore& store() const { return store_; }
  std::size_t count() const { return store_.count(); }

  std::vector<ScoredDoc> search(std::span<const float> query, std::size_t k) const {
    store_.check_query(query);
    std::vector<ScoredDoc> hits(store_.count());
    for (std::size_t i = 0; i < store_.count(); ++i) {
      hits[i] = {static_cast<std::uint32_t>(i), dot(query, store_.row(i))};
    }
    const auto keep = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                      ranks_before);
    hits.resize(keep);
    return hits;
  }

 private:
  VectorStore store_;
};

/// Hierarchical navigable small-world graph (Malkov & Yashunin) with the
/// neighbour-selection heuristic. Construction is single-threaded and fully
/// determined by (seed, insertion order); the built graph is read-only.
class HnswIndex {
 public:
  HnswIndex() = default;

  HnswIndex(VectorStore store, HnswParams params) : store_(std::move(store)), params_(params) {
    params_.validate();
    level_mult_ = 1.0 / std::log(static_cast<double>(params_.M));
    std::mt19937_64 rng(params_.seed);
    nodes_.resize(store_.count());
    for (std::uint32_t i = 0; i < store_.count(); ++i) insert(i, rng);
  }

  const VectorStore& store() const { return store_; }
  const HnswParams& params() const { return params_; }
  std::size_t count() const { return store_.count(); }
  int max_level() const { return max_level_; }

  std::vector<ScoredDoc> search(std::span<const float> query, std::size_t k) const {
    return search(query, k, params_.ef_search);
  }

  std::vector<ScoredDoc> search(std::span<const float> query, std::size_t k,
                                std::size_t ef_search) const {
    store_.check_query(query);
    if (ef_search < k) {
      throw Error(ErrorKind::config, "hnsw ef_search (" + std::to_string(ef_search) +
                                         ") must be >= k (" + std::to_string(k) + ")");
    }
    if (store_.count() == 0 || k == 0) return {};
    std::uint32_t ep = entry_;
    for (int level = max_level_; level > 0; --level) ep = greedy_closest(query, ep, level);
    auto found = search_layer(query, {ep}, ef_search, 0);
    std::vector<ScoredDoc> hits;
    hits.reserve(found.size());
    for (const auto& c : found) hits.push_back({c.id, dot(query, store_.row(c.id))});
    std::sort(hits.begin(), hits.end(), ranks_before);
    if (hits.size() > k) hits.resize(k);
    return hits;
  }

 private:
  struct Candidate {
    float dist;
    std::uint32_t id;
    bool operator<(const Candidate& o) const {
      return dist != o.dist ? dist < o.dist : id < o.id;
    }
    bool operator>(const Candidate& o) const { return o < *this; }
  };

  struct Node {
    int level = 0;
    std::vector<std::vector<std::uint32_t>> links;  // links[layer]
  };

  float distance(std::span<const float> q, std::uint32_t id) const {
    return 1.0f - dot_f(q, store_.row(id));
  }

  std::size_t max_links(int level) const {
    return level == 0 ? 2 * params_.M : params_.M;
  }

  int draw_level(std::mt19937_64& rng) const {
    const double u = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    return static_cast<int>(std::floor(-std::log(u) * level_mult_));
  }

  std::uint32_t greedy_closest(std::span<const float> q, std::uint32_t ep, int level) const {
    float best = distance(q, ep);
    bool moved = true;
    while (moved) {
      moved = false;
      for (const auto nb : nodes_[ep].links[level]) {
        const float d = distance(q, nb);
        if (d < best || (d == best && nb < ep)) {
          best = d;
          ep = nb;
          moved = true;
        }
      }
    }
    return ep;
  }

  /// Best-first search on one layer; returns up to ef candidates sorted by
  /// ascending distance.
  std::vector<Candidate> search_layer(std::span<const float> q,
                                      const std::vector<std::uint32_t>& entry_points,
                                      std::size_t ef, int level) const {
    std::vector<char> visited(store_.count(), 0);
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> frontier;
    std::priority_queue<Candidate> best;
    for (const auto ep : entry_points) {
      const Candidate c{distance(q, ep), ep};
      visited[ep] = 1;
      frontier.push(c);
      best.push(c);
    }
    while (best.size() > ef) best.pop();
    while (!frontier.empty()) {
      const Candidate cur = frontier.top();
      frontier.pop();
      if (best.size() >= ef && best.top() < cur) break;
      for (const auto nb : nodes_[cur.id].links[level]) {
        if (visited[nb]) continue;
        visited[nb] = 1;
        const Candidate c{distance(q, nb), nb};
        if (best.size() < ef || c < best.top()) {
          frontier.push(c);
          best.push(c);
          if (best.size() > ef) best.pop();
        }
      }
    }
    std::vector<Candidate> out;
    out.reserve(best.size());
    while (!best.empty()) {
      out.push_back(best.top());
      best.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  /// Keeps a candidate only if it is closer to the base point than to every
  /// neighbour already kept; `sorted` must be ascending by distance.
  std::vector<std::uint32_t> select_neighbors(const std::vector<Candidate>& sorted,
                                              std::size_t m) const {
    std::vector<std::uint32_t> kept;
    for (const auto& c : sorted) {
      if (kept.size() >= m) break;
      bool good = true;
      for (const auto r : kept) {
        if (1.0f - dot_f(store_.row(c.id), store_.row(r)) < c.dist) {
          good = false;
          break;
        }
      }
      if (good) kept.push_back(c.id);
    }
    return kept;
  }

  void insert(std::uint32_t id, std::mt19937_64& rng) {
    const int level = draw_level(rng);
    nodes_[id].level = level;
    nodes_[id].links.resize(static_cast<std::size_t>(level) + 1);
    if (id == 0) {
      entry_ = 0;
      max_level_ = level;
      return;
    }
    const auto q = store_.row(id);
    std::uint32_t ep = entry_;
    for (int l = max_level_; l > level; --l) ep = greedy_closest(q, ep, l);
    std::vector<std::uint32_t> eps{ep};
    for (int l = std::min(level, max_level_); l >= 0; --l) {
      auto found = search_layer(q, eps, params_.ef_construction, l);
      auto chosen = select_neighbors(found, params_.M);
      nodes_[id].links[l] = chosen;
      for (const auto nb : chosen) connect(nb, id, l);
      eps.clear();
      for (const auto& c : found) eps.push_back(c.id);
    }
    if (level > max_level_) {
      max_level_ = level;
      entry_ = id;
    }
  }

  void connect(std::uint32_t from, std::uint32_t to, int level) {
    auto& links = nodes_[from].links[level];
    links.push_back(to);
    if (links.size() <= max_links(level)) return;
    const auto base = store_.row(from);
    std::vector<Candidate> cands;
    cands.reserve(links.size());
    for (const auto nb : links) cands.push_back({distance(base, nb), nb});
    std::sort(cands.begin(), cands.end());
    links = select_neighbors(cands, max_links(level));
  }

  VectorStore store_;
  HnswParams params_;
  double level_mult_ = 0.0;
  std::vector<Node> nodes_;
  std::uint32_t entry_ = 0;
  int max_level_ = 0;
};

// ---------------------------------------------------------------------------
// Persistence: "PALVEC1\0", kind u8, layer u8, 2 pad bytes, dimension u32,
// count u32, M u32, ef_construction u32, ef_search u32, seed u64, then
// count*dimension float32 and count u32 labels. All little-endian. The HNSW
// graph is not stored; it is rebuilt deterministically from the same seed.
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(std::string_view in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error(ErrorKind::malformed_input, "truncated vector index");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += sizeof(T);
  return static_cast<T>(v);
}

}  // namespace detail

inline constexpr char kVectorMagic[8] = {'P', 'A', 'L', 'V', 'E', 'C', '1', '\0'};

inline std::string serialize_vectors(const VectorStore& store, VectorKind kind,
                                     const HnswParams& params = {}) {
  std::string out(kVectorMagic, sizeof(kVectorMagic));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(kind));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(store.layer()));
  detail::put_le<std::uint16_t>(out, 0);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.dimension()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.count()));
  detail::put_le<std::uint32_t>(out, params.M);
  detail::put_le<std::uint32_t>(out, params.ef_construction);
  detail::put_le<std::uint32_t>(out, params.ef_search);
  detail::put_le<std::uint64_t>(out, params.seed);
  for (const float f : store.data()) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    detail::put_le<std::uint32_t>(out, bits);
  }
  for (const auto label : store.labels()) detail::put_le<std::uint32_t>(out, label);
  return out;
}

struct LoadedVectors {
  VectorKind kind = VectorKind::exact;
  HnswParams params;
  VectorStore store;
};

inline LoadedVectors deserialize_vectors(std::string_view bytes) {
  if (bytes.size() < sizeof(kVectorMagic) ||
      std::memcmp(bytes.data(), kVectorMagic, sizeof(kVectorMagic)) != 0) {
    throw Error(ErrorKind::malformed_input, "not a PALVEC1 file");
  }
  std::size_t pos = sizeof(kVectorMagic);
  LoadedVectors out;
  const auto kind = detail::get_le<std::uint8_t>(bytes, pos);
  const auto layer = detail::get_le<std::uint8_t>(bytes, pos);
  if (kind > 1 || layer > 1) throw Error(ErrorKind::malformed_input, "bad PALVEC1 header");
  out.kind = static_cast<VectorKind>(kind);
  detail::get_le<std::uint16_t>(bytes, pos);
  const auto dim = detail::get_le<std::uint32_t>(bytes, pos);
  const auto count = detail::get_le<std::uint32_t>(bytes, pos);
  out.params.M = detail::get_le<std::uint32_t>(bytes, pos);
  out.params.ef_construction = detail::get_le<std::uint32_t>(bytes, pos);
  out.params.ef_search = detail::get_le<std::uint32_t>(bytes, pos);
  out.params.seed = detail::get_le<std::uint64_t>(bytes, pos);
  const std::size_t expected = pos + (static_cast<std::size_t>(count) * dim + count) * 4;
  if (bytes.size() != expected) throw Error(ErrorKind::malformed_input, "PALVEC1 size mismatch");
  std::vector<float> data(static_cast<std::size_t>(count) * dim);
  for (auto& f : data) {
    const auto bits = detail::get_le<std::uint32_t>(bytes, pos);
    std::memcpy(&f, &bits, sizeof(f));
  }
  out.store = VectorStore(dim, static_cast<Layer>(layer));
  for (std::uint32_t i = 0; i < count; ++i) {
    out.store.add(std::span<const float>(data.data() + static_cast<std::size_t>(i) * dim, dim),
                  detail::get_le<std::uint32_t>(bytes, pos));
  }
  return out;
}

inline void save_vectors(const std::filesystem::path& path, const VectorStore& store,
                         VectorKind kind, const HnswParams& params = {}) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  const auto bytes = serialize_vectors(store, kind, params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline LoadedVectors load_vectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize_vectors(bytes);
}

}  // namespace palace::index
