#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "palace/distill/types.hpp"
#include "palace/error.hpp"
#include "palace/index/analyzer.hpp"
#include "palace/index/bm25.hpp"

namespace palace::eval {

struct VocabSurvival {
  double survival_rate = 0.0;
  double query_retention = 0.0;
  double core_mean_idf = 0.0;
  double context_mean_idf = 0.0;
  double idf_ratio = 0.0;
  int exchanges = 0;
  int k = 10;
};

/// Distinct tokens of `text`, highest IDF first; ties keep first occurrence.
inline std::vector<std::string> top_idf_tokens(std::string_view text,
                                               const std::unordered_map<std::string, double>& idf, std::size_t k) {
  std::vector<std::string> distinct;
  std::unordered_set<std::string> seen;
  for (auto& t : index::split_terms(text)) {
    if (seen.insert(t).second) distinct.push_back(std::move(t));
  }
  auto idf_of = [&](const std::string& t) {
    const auto it = idf.find(t);
    return it == idf.end() ? 0.0 : it->second;
  };
  std::stable_sort(distinct.begin(), distinct.end(),
                   [&](const std::string& a, const std::string& b) { return idf_of(a) > idf_of(b); });
  if (distinct.size() > k) distinct.resize(k);
  return distinct;
}

/// `verbatim[i]` is the exchange text that `distilled[i]` was produced from.
/// IDF comes from the verbatim texts. An exchange with fewer than K distinct
/// tokens is scored against all of them.
inline VocabSurvival vocab_survival(std::span<const std::string> verbatim,
                                    std::span<const distill::DistilledObject> distilled,
                                    std::span<const std::string> queries, std::size_t k = 10) {
  if (k == 0) throw Error(ErrorKind::config, "vocab_survival: K must be >= 1");
  if (verbatim.size() != distilled.size()) {
    throw Error(ErrorKind::malformed_input, "vocab_survival: verbatim and distilled sizes differ");
  }
  std::vector<std::vector<std::string>> docs;
  docs.reserve(verbatim.size());
  for (const auto& v : verbatim) docs.push_back(index::split_terms(v));
  const auto idf = index::idf_table(docs);
  auto idf_of = [&](const std::string& t) {
    const auto it = idf.find(t);
    return it == idf.end() ? index::idf(docs.size(), 0) : it->second;
  };

  VocabSurvival out;
  out.k = static_cast<int>(k);
  double survival = 0.0;
  std::unordered_set<std::string> distilled_vocab;
  for (std::size_t i = 0; i < verbatim.size(); ++i) {
    const auto terms = index::split_terms(distilled[i].distill_text);
    const std::unordered_set<std::string> d(terms.begin(), terms.end());
    distilled_vocab.insert(d.begin(), d.end());
    const auto top = top_idf_tokens(verbatim[i], idf, k);
    if (top.empty()) continue;
    std::size_t kept = 0;
    for (const auto& t : top) kept += d.count(t);
    survival += static_cast<double>(kept) / static_cast<double>(top.size());
    ++out.exchanges;
  }
  if (out.exchanges) out.survival_rate = survival / out.exchanges;

  double retention = 0.0;
  int counted = 0;
  for (const auto& q : queries) {
    const auto terms = index::split_terms(q);
    const std::unordered_set<std::string> qs(terms.begin(), terms.end());
    if (qs.empty()) continue;
    std::size_t hit = 0;
    for (const auto& t : qs) hit += distilled_vocab.count(t);
    retention += static_cast<double>(hit) / static_cast<double>(qs.size());
    ++counted;
  }
  if (counted) out.query_retention = retention / counted;

  auto field_mean = [&](auto field) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& o : distilled) {
      for (const auto& t : index::split_terms(field(o))) {
        s += idf_of(t);
        ++n;
      }
    }
    return n ? s / static_cast<double>(n) : 0.0;
  };
  out.core_mean_idf = field_mean([](const distill::DistilledObject& o) { return o.exchange_core; });
  out.context_mean_idf = field_mean([](const distill::DistilledObject& o) { return o.specific_context; });
  out.idf_ratio = out.core_mean_idf > 0.0 ? out.context_mean_idf / out.core_mean_idf : 0.0;
  return out;
}

inline nlohmann::json to_json(const VocabSurvival& v) {
  return {{"survival_rate", v.survival_rate},     {"query_retention", v.query_retention},
          {"core_mean_idf", v.core_mean_idf},     {"context_mean_idf", v.context_mean_idf},
          {"idf_ratio", v.idf_ratio},             {"exchanges", v.exchanges},
          {"k", v.k}};
}

}  // namespace palace::eval
