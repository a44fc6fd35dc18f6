#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "palace/eval/metrics.hpp"
#include "palace/eval/types.hpp"

namespace palace::eval {

using QuerySet = std::set<std::string>;

/// Queries whose rank-1 result has consensus grade 3.
inline QuerySet solved(const std::map<std::string, GradedList>& per_query) {
  QuerySet out;
  for (const auto& [q, g] : per_query) {
    if (precision_at_1(g) == 1.0) out.insert(q);
  }
  return out;
}

struct Venn {
  int only_a = 0;
  int only_b = 0;
  int both = 0;
  int neither = 0;
};

inline Venn venn(const QuerySet& a, const QuerySet& b, const std::vector<std::string>& all_queries) {
  Venn v;
  for (const auto& q : all_queries) {
    const bool ia = a.count(q), ib = b.count(q);
    if (ia && ib) ++v.both;
    else if (ia) ++v.only_a;
    else if (ib) ++v.only_b;
    else ++v.neither;
  }
  return v;
}

struct CoverageReport {
  std::string family_a;
  std::string family_b;
  std::string best_a;
  std::string best_b;
  Venn best_vs_best;
  Venn oracle;
  int oracle_a = 0;
  int oracle_b = 0;
  // query type -> {exclusive to a, exclusive to b}, over the oracle sets.
  std::map<std::string, std::pair<int, int>> exclusive_by_type;
};

/// Best config of a family by MRR (then the metrics-table order).
inline std::string best_config(const GradedRuns& runs, const std::vector<std::string>& family) {
  GradedRuns sub;
  for (const auto& c : family) {
    if (const auto it = runs.find(c); it != runs.end()) sub.insert(*it);
  }
  const auto table = metrics_table(sub);
  return table.empty() ? std::string() : table.front().config_id;
}

inline CoverageReport coverage_partition(const GradedRuns& runs, const std::string& name_a,
                                         const std::vector<std::string>& family_a, const std::string& name_b,
                                         const std::vector<std::string>& family_b,
                                         const std::map<std::string, Query>& queries) {
  CoverageReport out;
  out.family_a = name_a;
  out.family_b = name_b;
  std::vector<std::string> all;
  for (const auto& [q, _] : queries) all.push_back(q);
  auto solved_by = [&](const std::string& c) {
    const auto it = runs.find(c);
    return it == runs.end() ? QuerySet{} : solved(it->second);
  };
  auto oracle_of = [&](const std::vector<std::string>& fam) {
    QuerySet u;
    for (const auto& c : fam) {
      const auto s = solved_by(c);
      u.insert(s.begin(), s.end());
    }
    return u;
  };
  out.best_a = best_config(runs, family_a);
  out.best_b = best_config(runs, family_b);
  out.best_vs_best = venn(solved_by(out.best_a), solved_by(out.best_b), all);
  const auto oa = oracle_of(family_a), ob = oracle_of(family_b);
  out.oracle = venn(oa, ob, all);
  out.oracle_a = static_cast<int>(oa.size());
  out.oracle_b = static_cast<int>(ob.size());
  for (const auto& [qid, q] : queries) {
    auto& slot = out.exclusive_by_type[std::string(to_string(q.query_type))];
    if (oa.count(qid) && !ob.count(qid)) ++slot.first;
    if (ob.count(qid) && !oa.count(qid)) ++slot.second;
  }
  return out;
}

inline nlohmann::json to_json(const Venn& v) {
  return {{"only_a", v.only_a}, {"only_b", v.only_b}, {"both", v.both}, {"neither", v.neither}};
}

inline nlohmann::json to_json(const CoverageReport& c) {
  nlohmann::json by_type = nlohmann::json::object();
  for (const auto& [t, p] : c.exclusive_by_type) by_type[t] = {{"only_a", p.first}, {"only_b", p.second}};
  return {{"family_a", c.family_a}, {"family_b", c.family_b},         {"best_a", c.best_a},
          {"best_b", c.best_b},     {"best_vs_best", to_json(c.best_vs_best)}, {"oracle", to_json(c.oracle)},
          {"oracle_a", c.oracle_a}, {"oracle_b", c.oracle_b},         {"exclusive_by_type", by_type}};
}

}  // namespace palace::eval
