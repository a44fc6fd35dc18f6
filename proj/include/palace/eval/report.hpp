#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "palace/eval/agreement.hpp"
#include "palace/eval/comparison.hpp"
#include "palace/eval/consensus.hpp"
#include "palace/eval/coverage.hpp"
#include "palace/eval/metrics.hpp"
#include "palace/eval/types.hpp"
#include "palace/eval/vocab.hpp"

namespace palace::eval {

struct CompressionRatios {
  // Total verbatim tokens over total distilled tokens.
  double aggregate = 0.0;
  // Mean of the per-exchange ratios.
  double per_item_mean = 0.0;
  int items = 0;
};

inline CompressionRatios compression_ratios(std::span<const std::pair<int, int>> verbatim_distilled_tokens) {
  CompressionRatios r;
  double tv = 0.0, td = 0.0, sum = 0.0;
  for (const auto& [v, d] : verbatim_distilled_tokens) {
    if (d <= 0) continue;
    tv += v;
    td += d;
    sum += static_cast<double>(v) / d;
    ++r.items;
  }
  if (r.items) {
    r.aggregate = tv / td;
    r.per_item_mean = sum / r.items;
  }
  return r;
}

struct CaseExtract {
  std::string query_id;
  std::string text;
  std::string query_type;
  double value = 0.0;
};

struct ReportInputs {
  GradedRuns runs;
  std::map<std::string, Query> queries;
  std::span<const GradeRecord> grades;
  std::span<const ConsensusGrade> consensus;
  int ungradeable = 0;
  std::map<std::string, int> parse_failures;
  std::optional<VocabSurvival> vocab;
  std::optional<VocabSurvival> vocab_identity;
  CompressionRatios compression;
  nlohmann::json constants = nlohmann::json::object();
  MetricOptions metric_options;
  ComparisonOptions comparison_options;
};

inline std::string fmt(double v, int decimals = 3) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline std::string fmt_p(double p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, p < 1e-4 ? "%.2e" : "%.4f", p);
  return buf;
}

/// Pure-family configs split into the verbatim baseline and the distilled set.
inline std::pair<std::vector<std::string>, std::vector<std::string>> pure_families(const GradedRuns& runs) {
  std::vector<std::string> verbatim, distilled;
  for (const auto& [cfg, _] : runs) {
    if (cfg.rfind("full_text/", 0) == 0) verbatim.push_back(cfg);
    else if (cfg.rfind("distill_", 0) == 0) distilled.push_back(cfg);
  }
  return {verbatim, distilled};
}

inline std::map<std::string, double> per_query_mean_map(const std::map<std::string, GradedList>& per_query) {
  std::map<std::string, double> out;
  for (const auto& [q, g] : per_query) out[q] = list_mean_grade(g).value_or(0.0);
  return out;
}

struct Report {
  nlohmann::json data;
  std::string rendered;
};

inline Report build_report(const ReportInputs& in) {
  using nlohmann::json;
  Report rep;
  json& j = rep.data;
  j["format"] = "palace-report";
  j["version"] = 1;

  const auto table = metrics_table(in.runs, in.metric_options);
  j["metrics"] = json::array();
  for (const auto& m : table) j["metrics"].push_back(to_json(m));
  int empty_queries = 0;
  for (const auto& m : table) empty_queries += m.n_empty;

  std::vector<ComparisonRow> comparisons;
  try {
    comparisons = comparison_suite(in.runs, in.comparison_options);
    j["comparisons"] = json::array();
    for (const auto& r : comparisons) j["comparisons"].push_back(to_json(r));
  } catch (const Error& e) {
    j["comparisons"] = json::array();
    j["comparisons_error"] = e.what();
  }
  j["bonferroni_alpha"] = bonferroni_alpha(comparisons.empty() ? 40 : comparisons.size());

  const auto agree = agreement(in.grades);
  j["agreement"] = {{"graders", agree.graders},
                    {"cohen_matrix", json::array()},
                    {"mean_pairwise_cohen", agree.mean_pairwise},
                    {"fleiss", agree.fleiss},
                    {"fleiss_items", agree.fleiss_items}};
  for (const auto& row : agree.kappa) {
    json r = json::array();
    for (const double k : row) r.push_back(std::isnan(k) ? json(nullptr) : json(k));
    j["agreement"]["cohen_matrix"].push_back(r);
  }

  const auto tiers = tier_counts(in.consensus);
  j["consensus"] = {{"unanimous", tiers.unanimous}, {"strong", tiers.strong},
                    {"weak", tiers.weak},           {"escalated", tiers.escalated},
                    {"graded_pairs", tiers.total()}};
  j["data_quality"] = {{"ungradeable_pairs", in.ungradeable},
                       {"parse_failures_by_grader", in.parse_failures},
                       {"empty_result_lists", empty_queries},
                       {"strict_empty_lists", in.metric_options.strict}};

  const auto [verbatim_fam, distilled_fam] = pure_families(in.runs);
  const auto cov = coverage_partition(in.runs, "full_text", verbatim_fam, "distilled", distilled_fam, in.queries);
  j["coverage"] = to_json(cov);

  // Query-type breakdown for each family's best config.
  json by_type = json::object();
  for (const auto* best : {&cov.best_a, &cov.best_b}) {
    if (best->empty()) continue;
    std::map<std::string, std::map<std::string, GradedList>> split;
    for (const auto& [q, g] : in.runs.at(*best)) {
      const auto it = in.queries.find(q);
      if (it != in.queries.end()) split[std::string(to_string(it->second.query_type))][q] = g;
    }
    for (const auto& [type, pq] : split) {
      const auto m = compute_metrics(*best, pq, in.metric_options);
      by_type[type][*best] = {{"mrr", m.mrr}, {"p_at_1", m.p_at_1}, {"mean_grade", m.mean_grade}, {"n", m.n_queries}};
    }
  }
  j["query_types"] = by_type;

  if (in.vocab) j["vocab_survival"] = to_json(*in.vocab);
  if (in.vocab_identity) j["vocab_survival_identity_control"] = to_json(*in.vocab_identity);
  j["compression"] = {{"aggregate_ratio", in.compression.aggregate},
                      {"per_item_mean_ratio", in.compression.per_item_mean},
                      {"items", in.compression.items}};

  // Case extracts: where the best distilled config beats the best verbatim
  // config by the widest per-query margin, and the lowest mean grades overall.
  std::vector<CaseExtract> advantage, worst;
  if (!cov.best_a.empty() && !cov.best_b.empty()) {
    const auto va = per_query_mean_map(in.runs.at(cov.best_a));
    const auto vb = per_query_mean_map(in.runs.at(cov.best_b));
    for (const auto& [q, b] : vb) {
      const auto it = va.find(q);
      const auto qi = in.queries.find(q);
      if (it == va.end() || qi == in.queries.end()) continue;
      advantage.push_back({q, qi->second.text, std::string(to_string(qi->second.query_type)), b - it->second});
    }
  }
  std::map<std::string, std::pair<double, int>> overall;
  for (const auto& [cfg, pq] : in.runs) {
    for (const auto& [q, g] : pq) {
      auto& [s, n] = overall[q];
      s += list_mean_grade(g).value_or(0.0);
      ++n;
    }
  }
  for (const auto& [q, sn] : overall) {
    const auto qi = in.queries.find(q);
    if (qi == in.queries.end()) continue;
    worst.push_back({q, qi->second.text, std::string(to_string(qi->second.query_type)), sn.first / sn.second});
  }
  std::stable_sort(advantage.begin(), advantage.end(), [](auto& a, auto& b) { return a.value > b.value; });
  std::stable_sort(worst.begin(), worst.end(), [](auto& a, auto& b) { return a.value < b.value; });
  if (advantage.size() > 5) advantage.resize(5);
  if (worst.size() > 5) worst.resize(5);
  auto cases_json = [](const std::vector<CaseExtract>& v) {
    json a = json::array();
    for (const auto& c : v) a.push_back({{"query_id", c.query_id}, {"text", c.text}, {"query_type", c.query_type}, {"value", c.value}});
    return a;
  };
  j["best_cases"] = cases_json(advantage);
  j["failure_cases"] = cases_json(worst);
  j["constants"] = in.constants;

  // Rendered tables.
  std::string& r = rep.rendered;
  r += "# Evaluation report\n\n## Configurations (" + std::to_string(table.size()) + ")\n\n";
  r += "| config | MRR | mean grade | 95% CI | P@1 | nDCG@10 | queries | empty |\n";
  r += "|---|---|---|---|---|---|---|---|\n";
  for (const auto& m : table) {
    r += "| " + m.config_id + " | " + fmt(m.mrr) + " | " + fmt(m.mean_grade) + " | [" + fmt(m.mean_grade_ci_low) +
         ", " + fmt(m.mean_grade_ci_high) + "] | " + fmt(m.p_at_1) + " | " + fmt(m.ndcg_at_10) + " | " +
         std::to_string(m.n_queries) + " | " + std::to_string(m.n_empty) + " |\n";
  }
  r += "\n## Full text vs distilled (" + std::to_string(comparisons.size()) + " comparisons, alpha " +
       fmt_p(j["bonferroni_alpha"].get<double>()) + ")\n\n";
  if (j.contains("comparisons_error")) r += j["comparisons_error"].get<std::string>() + "\n";
  r += "| mechanism | mode | fusion | delta | t | p(t) | p(W) | d_z | 95% CI | sig |\n";
  r += "|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& c : comparisons) {
    r += "| " + c.mechanism + " | " + c.mode + " | " + c.fusion + " | " + fmt(c.delta_mean_grade) + " | " +
         fmt(c.t_stat, 2) + " | " + fmt_p(c.p_value_t) + " | " + fmt_p(c.p_value_wilcoxon) + " | " +
         fmt(c.cohens_dz, 2) + (c.dz_degenerate ? "*" : "") + " | [" + fmt(c.ci_low) + ", " + fmt(c.ci_high) +
         "] | " + (c.significant_bonferroni ? "yes" : "no") + " |\n";
  }
  r += "\n## Grader agreement\n\n| |";
  for (const auto& g : agree.graders) r += " " + g + " |";
  r += "\n|---|";
  for (std::size_t i = 0; i < agree.graders.size(); ++i) r += "---|";
  r += "\n";
  for (std::size_t i = 0; i < agree.graders.size(); ++i) {
    r += "| " + agree.graders[i] + " |";
    for (const double k : agree.kappa[i]) r += " " + fmt(k) + " |";
    r += "\n";
  }
  r += "\nMean pairwise Cohen kappa " + fmt(agree.mean_pairwise) + "; Fleiss kappa " + fmt(agree.fleiss) +
       " over " + std::to_string(agree.fleiss_items) + " fully graded items.\n";
  r += "Consensus tiers: unanimous " + std::to_string(tiers.unanimous) + ", strong " + std::to_string(tiers.strong) +
       ", weak " + std::to_string(tiers.weak) + ", escalated " + std::to_string(tiers.escalated) +
       "; ungradeable " + std::to_string(in.ungradeable) + ".\n";
  r += "\n## Coverage (rank-1 grade 3)\n\n";
  r += "Best full text: " + cov.best_a + "; best distilled: " + cov.best_b + "\n\n";
  r += "| | only full text | only distilled | both | neither |\n|---|---|---|---|---|\n";
  r += "| best vs best | " + std::to_string(cov.best_vs_best.only_a) + " | " + std::to_string(cov.best_vs_best.only_b) +
       " | " + std::to_string(cov.best_vs_best.both) + " | " + std::to_string(cov.best_vs_best.neither) + " |\n";
  r += "| oracle union | " + std::to_string(cov.oracle.only_a) + " | " + std::to_string(cov.oracle.only_b) + " | " +
       std::to_string(cov.oracle.both) + " | " + std::to_string(cov.oracle.neither) + " |\n";
  r += "\n## Query types\n\n| type | config | MRR | P@1 | mean grade | n |\n|---|---|---|---|---|---|\n";
  for (const auto& [type, cfgs] : by_type.items()) {
    for (const auto& [cfg, m] : cfgs.items()) {
      r += "| " + type + " | " + cfg + " | " + fmt(m["mrr"].get<double>()) + " | " + fmt(m["p_at_1"].get<double>()) +
           " | " + fmt(m["mean_grade"].get<double>()) + " | " + std::to_string(m["n"].get<int>()) + " |\n";
    }
  }
  if (in.vocab) {
    r += "\n## Vocabulary survival\n\nTop-" + std::to_string(in.vocab->k) + " IDF survival " +
         fmt(in.vocab->survival_rate) + ", query term retention " + fmt(in.vocab->query_retention) +
         ", mean IDF core " + fmt(in.vocab->core_mean_idf) + " vs context " + fmt(in.vocab->context_mean_idf) +
         " (ratio " + fmt(in.vocab->idf_ratio, 2) + ").\n";
    if (in.vocab_identity) r += "Identity control survival " + fmt(in.vocab_identity->survival_rate) + ".\n";
  }
  r += "\n## Compression\n\nAggregate " + fmt(in.compression.aggregate, 1) + "x, per-item mean " +
       fmt(in.compression.per_item_mean, 1) + "x over " + std::to_string(in.compression.items) + " exchanges.\n";
  auto render_cases = [&](const char* title, const std::vector<CaseExtract>& v) {
    r += std::string("\n## ") + title + "\n\n| query | type | value | text |\n|---|---|---|---|\n";
    for (const auto& c : v) r += "| " + c.query_id + " | " + c.query_type + " | " + fmt(c.value) + " | " + c.text + " |\n";
  };
  render_cases("Largest distilled advantage", advantage);
  render_cases("Lowest mean grade", worst);
  r += "\n## Constants\n\n```\n" + in.constants.dump(2) + "\n```\n";
  j["rendered"] = r;
  return rep;
}

}  // namespace palace::eval
