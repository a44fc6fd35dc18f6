#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "palace/error.hpp"

namespace palace::eval {

using nlohmann::json;

enum class QueryType { conceptual, phrase, exact_term };

inline std::string_view to_string(QueryType t) {
  switch (t) {
    case QueryType::conceptual: return "conceptual";
    case QueryType::phrase: return "phrase";
    case QueryType::exact_term: return "exact_term";
  }
  return "conceptual";
}

inline QueryType parse_query_type(std::string_view s) {
  if (s == "conceptual") return QueryType::conceptual;
  if (s == "phrase") return QueryType::phrase;
  if (s == "exact_term") return QueryType::exact_term;
  throw Error(ErrorKind::malformed_input, "query_type must be conceptual, phrase or exact_term");
}

struct Query {
  std::string query_id;
  std::string text;
  QueryType query_type = QueryType::conceptual;
  std::string project_group;
  // Exchange refs known to answer the query (synthetic corpora only).
  std::vector<std::string> targets;
};

inline json to_json(const Query& q) {
  json j = {{"query_id", q.query_id}, {"text", q.text}, {"query_type", to_string(q.query_type)},
            {"project_group", q.project_group}};
  if (!q.targets.empty()) j["targets"] = q.targets;
  return j;
}

inline Query query_from_json(const json& j) {
  Query q;
  q.query_id = j.at("query_id").get<std::string>();
  q.text = j.at("text").get<std::string>();
  q.query_type = parse_query_type(j.value("query_type", "conceptual"));
  q.project_group = j.value("project_group", "");
  q.targets = j.value("targets", std::vector<std::string>{});
  return q;
}

struct GradeRecord {
  std::string query_id;
  std::string config_id;
  std::string exchange_ref;
  std::string grader_id;
  std::optional<int> grade;
  std::string reason;
  bool parse_failed = false;
};

inline json to_json(const GradeRecord& g) {
  return {{"query_id", g.query_id},       {"config_id", g.config_id}, {"exchange_ref", g.exchange_ref},
          {"grader_id", g.grader_id},     {"grade", g.grade ? json(*g.grade) : json(nullptr)},
          {"reason", g.reason},           {"parse_failed", g.parse_failed}};
}

inline GradeRecord grade_from_json(const json& j) {
  GradeRecord g;
  g.query_id = j.at("query_id").get<std::string>();
  g.config_id = j.at("config_id").get<std::string>();
  g.exchange_ref = j.at("exchange_ref").get<std::string>();
  g.grader_id = j.at("grader_id").get<std::string>();
  if (j.contains("grade") && !j["grade"].is_null()) g.grade = j["grade"].get<int>();
  g.reason = j.value("reason", "");
  g.parse_failed = j.value("parse_failed", !g.grade.has_value());
  if (g.grade.has_value() == g.parse_failed) {
    throw Error(ErrorKind::malformed_input, "grade record must have a grade xor parse_failed");
  }
  return g;
}

enum class Tier { unanimous, strong, weak, escalated };

inline std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::unanimous: return "unanimous";
    case Tier::strong: return "strong";
    case Tier::weak: return "weak";
    case Tier::escalated: return "escalated";
  }
  return "weak";
}

inline Tier parse_tier(std::string_view s) {
  if (s == "unanimous") return Tier::unanimous;
  if (s == "strong") return Tier::strong;
  if (s == "weak") return Tier::weak;
  if (s == "escalated") return Tier::escalated;
  throw Error(ErrorKind::malformed_input, "unknown tier");
}

using Histogram = std::array<int, 4>;

struct ConsensusGrade {
  std::string query_id;
  std::string config_id;
  std::string exchange_ref;
  int grade = 0;
  Tier tier = Tier::weak;
  Histogram votes{};
  std::optional<int> escalation_vote;
};

inline json to_json(const ConsensusGrade& c) {
  return {{"query_id", c.query_id},
          {"config_id", c.config_id},
          {"exchange_ref", c.exchange_ref},
          {"grade", c.grade},
          {"tier", to_string(c.tier)},
          {"votes", c.votes},
          {"escalation_vote", c.escalation_vote ? json(*c.escalation_vote) : json(nullptr)}};
}

inline ConsensusGrade consensus_from_json(const json& j) {
  ConsensusGrade c;
  c.query_id = j.at("query_id").get<std::string>();
  c.config_id = j.at("config_id").get<std::string>();
  c.exchange_ref = j.at("exchange_ref").get<std::string>();
  c.grade = j.at("grade").get<int>();
  c.tier = parse_tier(j.at("tier").get<std::string>());
  c.votes = j.at("votes").get<Histogram>();
  if (j.contains("escalation_vote") && !j["escalation_vote"].is_null()) c.escalation_vote = j["escalation_vote"].get<int>();
  return c;
}

struct MetricsRow {
  std::string config_id;
  double mrr = 0.0;
  double mean_grade = 0.0;
  double p_at_1 = 0.0;
  double ndcg_at_10 = 0.0;
  int n_queries = 0;
  int n_empty = 0;
  double mean_grade_ci_low = 0.0;
  double mean_grade_ci_high = 0.0;
};

inline json to_json(const MetricsRow& m) {
  return {{"config_id", m.config_id}, {"mrr", m.mrr},       {"mean_grade", m.mean_grade},
          {"p_at_1", m.p_at_1},       {"ndcg_at_10", m.ndcg_at_10}, {"n_queries", m.n_queries},
          {"n_empty", m.n_empty},     {"mean_grade_ci", {m.mean_grade_ci_low, m.mean_grade_ci_high}}};
}

struct ComparisonRow {
  std::string mechanism;
  std::string mode;
  std::string fusion;
  std::string baseline_config;
  std::string distilled_config;
  double delta_mean_grade = 0.0;  // baseline minus distilled
  double t_stat = 0.0;
  double p_value_t = 1.0;
  double p_value_wilcoxon = 1.0;
  double cohens_dz = 0.0;
  bool dz_degenerate = false;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double dz_ci_low = 0.0;
  double dz_ci_high = 0.0;
  bool significant_bonferroni = false;
};

inline json to_json(const ComparisonRow& r) {
  return {{"mechanism", r.mechanism},
          {"mode", r.mode},
          {"fusion", r.fusion},
          {"baseline_config", r.baseline_config},
          {"distilled_config", r.distilled_config},
          {"delta_mean_grade", r.delta_mean_grade},
          {"t_stat", r.t_stat},
          {"p_value_t", r.p_value_t},
          {"p_value_wilcoxon", r.p_value_wilcoxon},
          {"cohens_dz", r.cohens_dz},
          {"dz_degenerate", r.dz_degenerate},
          {"ci", {r.ci_low, r.ci_high}},
          {"dz_ci", {r.dz_ci_low, r.dz_ci_high}},
          {"significant_bonferroni", r.significant_bonferroni}};
}

}  // namespace palace::eval
