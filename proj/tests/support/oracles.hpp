#pragma once

// Definitional reimplementations shared by the unit tests and the acceptance
// binary. Nothing here calls into the library code it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "palace/index/bm25.hpp"
#include "palace/index/embedding.hpp"
#include "palace/index/vector_index.hpp"

namespace palace::oracle {

inline std::vector<float> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (auto& x : v) x = g(rng);
  index::normalize(v);
  return v;
}

inline index::VectorStore random_store(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  index::VectorStore store(dim, index::Layer::distilled);
  for (std::size_t i = 0; i < n; ++i) store.add(random_unit(rng, dim), static_cast<std::uint32_t>(i));
  return store;
}

/// Inner-product ranking by full sort, ties to the lower id.
inline std::vector<std::uint32_t> brute_force_top(const index::VectorStore& store, const std::vector<float>& q,
                                                  std::size_t k) {
  std::vector<std::pair<double, std::uint32_t>> all;
  for (std::uint32_t i = 0; i < store.count(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < q.size(); ++j) s += static_cast<double>(q[j]) * store.row(i)[j];
    all.push_back({-s, i});
  }
  std::sort(all.begin(), all.end());
  std::vector<std::uint32_t> out;
  for (std::size_t r = 0; r < k && r < all.size(); ++r) out.push_back(all[r].second);
  return out;
}

/// BM25 recounting tf and df from raw token lists on every call.
inline double bm25(const std::vector<std::vector<std::string>>& docs, const std::vector<std::string>& query,
                   std::size_t d, double k1 = 1.5, double b = 0.75) {
  const double n = static_cast<double>(docs.size());
  double total_len = 0;
  for (const auto& doc : docs) total_len += static_cast<double>(doc.size());
  const double avgdl = total_len / n;
  double score = 0.0;
  for (const auto& q : query) {
    double df = 0;
    for (const auto& doc : docs) df += std::count(doc.begin(), doc.end(), q) > 0 ? 1 : 0;
    const double tf = static_cast<double>(std::count(docs[d].begin(), docs[d].end(), q));
    if (tf == 0) continue;
    const double w = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    const double dl = static_cast<double>(docs[d].size());
    score += w * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl));
  }
  return score;
}

inline double reciprocal_rank(const std::vector<int>& g) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == 3) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

inline double ndcg10(const std::vector<int>& g) {
  auto dcg = [](const std::vector<int>& v) {
    double s = 0;
    for (std::size_t i = 0; i < v.size() && i < 10; ++i) s += (std::pow(2.0, v[i]) - 1) / (std::log(i + 2.0) / std::log(2.0));
    return s;
  };
  auto ideal = g;
  std::sort(ideal.rbegin(), ideal.rend());
  ideal.resize(std::min<std::size_t>(ideal.size(), 10));
  std::vector<int> head(g.begin(), g.begin() + std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(g.size()), 10));
  const double i = dcg(ideal);
  return i == 0 ? 0 : dcg(head) / i;
}

inline std::vector<index::ScoredDoc> random_list(std::mt19937& rng, std::uint32_t universe, std::size_t n) {
  std::vector<std::uint32_t> ids(universe);
  std::iota(ids.begin(), ids.end(), 0u);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<index::ScoredDoc> out;
  for (std::size_t i = 0; i < n && i < universe; ++i) out.push_back({ids[i], u(rng)});
  std::sort(out.begin(), out.end(), index::ranks_before);
  return out;
}

/// scipy/sklearn/statsmodels values frozen by tests/data/make_stats_reference.py.
inline const nlohmann::json& stats_reference(const std::string& data_dir) {
  static const nlohmann::json j = [&] {
    std::ifstream in(data_dir + "/stats_reference.json");
    return nlohmann::json::parse(in);
  }();
  return j;
}

}  // namespace palace::oracle
