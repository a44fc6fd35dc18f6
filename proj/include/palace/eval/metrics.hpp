#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "palace/eval/consensus.hpp"
#include "palace/eval/types.hpp"
#include "palace/search/ranked_list.hpp"

namespace palace::eval {

inline constexpr double kZ95 = 1.959963984540054;

/// Consensus grades of one ranked list, best rank first. An ungradeable
/// result keeps its rank but holds no grade.
using GradedList = std::vector<std::optional<int>>;

struct MetricOptions {
  // Empty result lists count as zero for MRR and P@1; when false they are
  // dropped from those denominators.
  bool strict = true;
  bool linear_gain = false;
};

inline double reciprocal_rank(const GradedList& g) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == 3) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

inline double precision_at_1(const GradedList& g) { return !g.empty() && g[0] == 3 ? 1.0 : 0.0; }

inline double gain(int grade, bool linear) { return linear ? grade : std::exp2(grade) - 1.0; }

inline double ndcg_at(const GradedList& g, std::size_t depth = 10, bool linear_gain = false) {
  std::vector<int> grades;
  for (const auto& x : g) grades.push_back(x.value_or(0));
  auto dcg = [&](const std::vector<int>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size() && i < depth; ++i) {
      s += gain(v[i], linear_gain) / std::log2(static_cast<double>(i) + 2.0);
    }
    return s;
  };
  const double actual = dcg(grades);
  // The ideal ordering is drawn from every graded result of the list.
  std::sort(grades.begin(), grades.end(), std::greater<>());
  const double ideal = dcg(grades);
  return ideal > 0.0 ? actual / ideal : 0.0;
}

/// Mean of the graded results of one list; nothing when it has none.
inline std::optional<double> list_mean_grade(const GradedList& g) {
  double s = 0.0;
  int n = 0;
  for (const auto& x : g) {
    if (x) {
      s += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return s / n;
}

/// `per_query` must hold an entry (possibly empty) for every evaluated query.
inline MetricsRow compute_metrics(std::string config_id, const std::map<std::string, GradedList>& per_query,
                                  const MetricOptions& opt = {}) {
  MetricsRow row;
  row.config_id = std::move(config_id);
  row.n_queries = static_cast<int>(per_query.size());
  double rr = 0.0, p1 = 0.0, nd = 0.0;
  int denom = 0;
  std::vector<double> grades;
  for (const auto& [qid, g] : per_query) {
    if (g.empty()) {
      ++row.n_empty;
      if (!opt.strict) continue;
    }
    ++denom;
    rr += reciprocal_rank(g);
    p1 += precision_at_1(g);
    nd += ndcg_at(g, 10, opt.linear_gain);
    for (const auto& x : g) {
      if (x) grades.push_back(*x);
    }
  }
  if (denom > 0) {
    row.mrr = rr / denom;
    row.p_at_1 = p1 / denom;
    row.ndcg_at_10 = nd / denom;
  }
  if (!grades.empty()) {
    double s = 0.0;
    for (const double x : grades) s += x;
    const double n = static_cast<double>(grades.size());
    row.mean_grade = s / n;
    double ss = 0.0;
    for (const double x : grades) ss += (x - row.mean_grade) * (x - row.mean_grade);
    const double se = grades.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
    row.mean_grade_ci_low = row.mean_grade - kZ95 * se;
    row.mean_grade_ci_high = row.mean_grade + kZ95 * se;
  }
  return row;
}

/// config_id -> query_id -> graded list.
using GradedRuns = std::map<std::string, std::map<std::string, GradedList>>;

/// Joins ranked lists with consensus grades. `ref_of` maps an exchange id
/// to its external reference.
inline GradedRuns join_grades(std::span<const search::RankedList> lists, std::span<const ConsensusGrade> grades,
                              const std::function<std::string(std::uint32_t)>& ref_of) {
  std::map<PairKey, int> by_key;
  for (const auto& g : grades) by_key[{g.query_id, g.config_id, g.exchange_ref}] = g.grade;
  GradedRuns out;
  for (const auto& l : lists) {
    auto& gl = out[l.config_id][l.query_id];
    gl.clear();
    for (const auto& e : l.entries) {
      const auto it = by_key.find({l.query_id, l.config_id, ref_of(e.exchange)});
      gl.push_back(it == by_key.end() ? std::nullopt : std::optional<int>(it->second));
    }
  }
  return out;
}

/// Gives every (config, query) pair an entry, empty when the run file had
/// no results for it.
inline void complete_runs(GradedRuns& runs, const std::vector<std::string>& config_ids,
                          const std::vector<std::string>& query_ids) {
  for (const auto& c : config_ids) {
    auto& per_query = runs[c];
    for (const auto& q : query_ids) per_query.try_emplace(q);
  }
}

/// Metrics for every config, sorted by MRR, then mean grade, P@1 and
/// nDCG@10 (all descending), then config id.
inline std::vector<MetricsRow> metrics_table(const GradedRuns& runs, const MetricOptions& opt = {}) {
  std::vector<MetricsRow> rows;
  for (const auto& [cfg, per_query] : runs) rows.push_back(compute_metrics(cfg, per_query, opt));
  std::sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
    if (a.mrr != b.mrr) return a.mrr > b.mrr;
    if (a.mean_grade != b.mean_grade) return a.mean_grade > b.mean_grade;
    if (a.p_at_1 != b.p_at_1) return a.p_at_1 > b.p_at_1;
    if (a.ndcg_at_10 != b.ndcg_at_10) return a.ndcg_at_10 > b.ndcg_at_10;
    return a.config_id < b.config_id;
  });
  return rows;
}

}  // namespace palace::eval
