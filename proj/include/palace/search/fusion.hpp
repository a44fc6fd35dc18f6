#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "palace/error.hpp"
#include "palace/index/bm25.hpp"
#include "palace/search/config.hpp"
#include "palace/search/ranked_list.hpp"

namespace palace::search {

struct FusionParams {
  double rrf_k = 60.0;
  std::size_t depth = 7;
};

/// Min-max over one list's retrieved scores; a list whose scores are all equal
/// normalizes to 1.0.
inline std::vector<double> minmax_normalize(std::span<const index::ScoredDoc> list) {
  std::vector<double> out(list.size(), 1.0);
  if (list.empty()) return out;
  const auto [lo, hi] = std::minmax_element(list.begin(), list.end(),
                                            [](const auto& a, const auto& b) { return a.score < b.score; });
  const double range = hi->score - lo->score;
  if (range > 0.0) {
    for (std::size_t i = 0; i < list.size(); ++i) out[i] = (list[i].score - lo->score) / range;
  }
  return out;
}

/// Fuses ranked signal lists (hits in ranking order, doc = exchange id).
/// Per-document contributions are summed in ascending order so the result
/// does not depend on list order for the symmetric strategies. Ties go to the
/// smaller exchange id. Output is cut to params.depth.
inline std::vector<RankedEntry> fuse(std::span<const std::vector<index::ScoredDoc>> lists, const FusionSpec& spec,
                                     const FusionParams& params = {}) {
  if (lists.empty()) throw Error(ErrorKind::config, "fuse needs at least one list");
  if (spec.kind == FusionKind::passthrough) {
    if (lists.size() != 1) throw Error(ErrorKind::config, "passthrough fusion takes exactly one list");
    auto hits = lists[0];
    if (hits.size() > params.depth) hits.resize(params.depth);
    return to_entries(hits);
  }
  if (spec.kind == FusionKind::weighted) {
    if (spec.weights.size() != lists.size()) {
      throw Error(ErrorKind::config, "fusion " + spec.name + " has " + std::to_string(spec.weights.size()) +
                                         " weights for " + std::to_string(lists.size()) + " lists");
    }
    double sum = 0.0;
    for (const double w : spec.weights) sum += w;
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::config, "fusion weights must sum to 1");
  }

  struct Acc {
    std::vector<double> parts;
    std::uint32_t provenance = 0;
  };
  std::map<std::uint32_t, Acc> acc;
  for (std::size_t li = 0; li < lists.size(); ++li) {
    const auto& list = lists[li];
    const auto norm = minmax_normalize(list);
    for (std::size_t r = 0; r < list.size(); ++r) {
      double c = 0.0;
      switch (spec.kind) {
        case FusionKind::rrf: c = 1.0 / (params.rrf_k + static_cast<double>(r + 1)); break;
        case FusionKind::weighted: c = spec.weights[li] * norm[r]; break;
        default: c = norm[r]; break;
      }
      auto& a = acc[list[r].doc];
      a.parts.push_back(c);
      a.provenance |= 1u << li;
    }
  }

  std::vector<RankedEntry> fused;
  fused.reserve(acc.size());
  for (auto& [doc, a] : acc) {
    std::sort(a.parts.begin(), a.parts.end());
    double s = 0.0;
    if (spec.kind == FusionKind::max) {
      s = a.parts.back();
    } else {
      for (const double p : a.parts) s += p;
      if (spec.kind == FusionKind::combmnz) s *= static_cast<double>(a.parts.size());
    }
    fused.push_back({doc, s, 0, a.provenance});
  }
  std::sort(fused.begin(), fused.end(), [](const RankedEntry& x, const RankedEntry& y) {
    return x.score != y.score ? x.score > y.score : x.exchange < y.exchange;
  });
  if (fused.size() > params.depth) fused.resize(params.depth);
  for (std::size_t i = 0; i < fused.size(); ++i) fused[i].rank = static_cast<int>(i + 1);
  return fused;
}

}  // namespace palace::search
