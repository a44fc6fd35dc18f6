#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "palace/error.hpp"
#include "palace/index/bm25.hpp"

namespace palace::search {

struct RankedEntry {
  std::uint32_t exchange = 0;  // exchange id; id order is exchange_ref order
  double score = 0.0;
  int rank = 0;                // 1-based
  std::uint32_t provenance = 0;  // bit i set: signal i returned this exchange

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

struct RankedList {
  std::string query_id;
  std::string config_id;
  std::vector<RankedEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

/// Builds entries from (exchange, score) hits already in ranking order.
inline std::vector<RankedEntry> to_entries(const std::vector<index::ScoredDoc>& hits, std::uint32_t provenance = 1) {
  std::vector<RankedEntry> out;
  out.reserve(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) {
    out.push_back({hits[i].doc, hits[i].score, static_cast<int>(i + 1), provenance});
  }
  return out;
}

/// Ranks 1..n without gaps, non-increasing scores, unique exchanges.
inline void validate(const RankedList& list) {
  std::set<std::uint32_t> seen;
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    const auto& e = list.entries[i];
    if (e.rank != static_cast<int>(i + 1)) throw Error(ErrorKind::malformed_input, "rank gap in " + list.config_id);
    if (i > 0 && e.score > list.entries[i - 1].score) {
      throw Error(ErrorKind::malformed_input, "scores increase in " + list.config_id);
    }
    if (!seen.insert(e.exchange).second) throw Error(ErrorKind::malformed_input, "duplicate exchange in " + list.config_id);
  }
}

}  // namespace palace::search
