#pragma once

#include <map>
#include <string>
#include <vector>

#include "palace/error.hpp"
#include "palace/eval/metrics.hpp"
#include "palace/eval/statistics.hpp"
#include "palace/eval/types.hpp"
#include "palace/search/config.hpp"

namespace palace::eval {

/// Per-query mean grade for one config over `query_ids`. A query with no
/// graded results scores 0.
inline std::vector<double> per_query_means(const std::map<std::string, GradedList>& per_query,
                                           const std::vector<std::string>& query_ids) {
  std::vector<double> out;
  out.reserve(query_ids.size());
  for (const auto& q : query_ids) {
    const auto it = per_query.find(q);
    out.push_back(it == per_query.end() ? 0.0 : list_mean_grade(it->second).value_or(0.0));
  }
  return out;
}

struct ComparisonOptions {
  int resamples = kBootstrapResamples;
  std::uint64_t seed = kBootstrapSeed;
};

/// Full-text baseline against every distilled configuration of the same
/// mechanism within the pure family: 4 mechanisms x 10 = 40 rows.
inline std::vector<ComparisonRow> comparison_suite(const GradedRuns& runs, const ComparisonOptions& opt = {}) {
  const auto pure = search::enumerate_configs(search::ConfigSpace::pure);
  std::vector<std::string> missing;
  for (const auto& c : pure) {
    if (!runs.count(c.id())) missing.push_back(c.id());
  }
  if (!missing.empty()) {
    std::string msg = "comparison suite is missing configs:";
    for (const auto& m : missing) msg += " " + m;
    throw Error(ErrorKind::not_found, msg);
  }
  std::vector<std::pair<const search::SearchConfig*, const search::SearchConfig*>> pairs;
  for (const auto& base : pure) {
    if (base.mode != "full_text") continue;
    for (const auto& c : pure) {
      if (c.mode != "full_text" && c.mechanism == base.mechanism) pairs.push_back({&base, &c});
    }
  }
  const double alpha = bonferroni_alpha(pairs.size());
  std::vector<ComparisonRow> rows;
  for (const auto& [base, dist] : pairs) {
    const auto& b = runs.at(base->id());
    const auto& d = runs.at(dist->id());
    std::vector<std::string> shared;
    for (const auto& [q, _] : b) {
      if (d.count(q)) shared.push_back(q);
    }
    const auto x = per_query_means(b, shared);
    const auto y = per_query_means(d, shared);
    const auto r = paired_tests(x, y, opt.resamples, opt.seed);
    ComparisonRow row;
    row.mechanism = dist->mechanism;
    row.mode = dist->mode;
    row.fusion = dist->fusion.name;
    row.baseline_config = base->id();
    row.distilled_config = dist->id();
    row.delta_mean_grade = r.delta;
    row.t_stat = r.t.t;
    row.p_value_t = r.t.p;
    row.p_value_wilcoxon = r.p_wilcoxon;
    row.cohens_dz = r.dz.dz;
    row.dz_degenerate = r.dz.degenerate;
    row.ci_low = r.ci.mean_low;
    row.ci_high = r.ci.mean_high;
    row.dz_ci_low = r.ci.dz_low;
    row.dz_ci_high = r.ci.dz_high;
    row.significant_bonferroni = row.p_value_t < alpha;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace palace::eval
