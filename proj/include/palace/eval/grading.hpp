#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "palace/distill/prompt.hpp"
#include "palace/eval/types.hpp"
#include "palace/index/analyzer.hpp"
#include "palace/index/layers.hpp"
#include "palace/provider.hpp"
#include "palace/search/config.hpp"
#include "palace/search/ranked_list.hpp"
#include "palace/util/hash.hpp"
#include "palace/util/json_extract.hpp"
#include "palace/util/parallel.hpp"
#include "palace/util/text.hpp"

namespace palace::eval {

inline constexpr std::string_view kGradingTemplate =
    R"(You are a strict relevance assessor for a conversational
search system.

QUERY: "{query}"

SEARCH RESULT:
---
{snippet}
---

Grade this result's relevance to the query on a 0-3 scale.

SCALE:
0 = Irrelevant: The result has nothing to do with the query.
    Different topic entirely.

1 = Related: The result is on a related topic but does NOT
    answer the query. It may mention similar concepts or
    share terminology, but a user would not find what they
    were looking for.

2 = Highly Relevant: The result contains an answer or useful
    information for the query, but the answer may be unclear,
    incomplete, or buried among other content.

3 = Perfectly Relevant: The result is dedicated to the query
    topic and directly provides the information sought.

GRADING RULES:
- The key test for grade 2 vs grade 1: does the result
  contain a usable answer? If yes, grade 2+. If it is merely
  on a related topic, grade 1.
- Only assign grade 3 if the result specifically and clearly
  addresses the query.
- When uncertain between two grades, assign the lower one.
- A result about a related but different tool, version, or
  concept is grade 1, not grade 2.

Respond with a JSON object. Write your reasoning first,
then the grade.
{"reason": "<10-20 word justification>", "grade": <0|1|2|3>}
)";

// Escalation variant: the same scale, graded against the conversation the
// excerpt was cut from rather than the excerpt alone.
inline constexpr std::string_view kEscalationNote =
    R"(
NOTE: The search result is an excerpt of a longer conversation and may be
cut off. Decide whether the conversation it comes from addresses the query
topic. Do not lower the grade only because the excerpt is incomplete.
)";

enum class SnippetLayer { verbatim, distilled };

inline constexpr std::size_t kDefaultGradeTruncation = 1200;

/// Verbatim snippets are truncated; distilled snippets never are.
inline std::string build_grading_prompt(std::string_view query, std::string_view snippet, std::size_t truncate_chars,
                                        SnippetLayer layer = SnippetLayer::verbatim, bool escalation = false) {
  const std::string body =
      layer == SnippetLayer::verbatim ? text::truncate_chars(snippet, truncate_chars) : std::string(snippet);
  auto prompt = distill::interpolate(kGradingTemplate, {{"query", query}, {"snippet", body}});
  if (escalation) {
    const auto at = prompt.find("\nGrade this result");
    prompt.insert(at, kEscalationNote);
  }
  return prompt;
}

struct ParsedGrade {
  std::optional<int> grade;
  std::string reason;
  bool parse_failed = true;
};

/// Last well-formed JSON object with an integer "grade" in 0..3.
inline ParsedGrade parse_grade(std::string_view raw) {
  ParsedGrade out;
  const auto objects = json_extract::objects(raw);
  for (auto it = objects.rbegin(); it != objects.rend(); ++it) {
    const auto g = it->find("grade");
    if (g == it->end() || !g->is_number_integer()) continue;
    const auto v = g->get<long long>();
    if (v < 0 || v > 3) continue;
    out.grade = static_cast<int>(v);
    out.parse_failed = false;
    const auto r = it->find("reason");
    if (r != it->end() && r->is_string()) out.reason = r->get<std::string>();
    return out;
  }
  return out;
}

/// Snippet layer the graders see for a configuration: pure distilled modes
/// are judged on the distilled text, everything else on verbatim text.
inline SnippetLayer snippet_layer(const search::SearchConfig& c) {
  return c.family == search::Family::pure && c.mode != "full_text" ? SnippetLayer::distilled : SnippetLayer::verbatim;
}

inline SnippetLayer snippet_layer_for_id(std::string_view config_id) {
  const auto mode = config_id.substr(0, config_id.find('/'));
  return mode.rfind("distill_", 0) == 0 ? SnippetLayer::distilled : SnippetLayer::verbatim;
}

inline std::string grading_snippet(const index::LayerIndexes& idx, std::uint32_t exchange, SnippetLayer layer) {
  if (layer == SnippetLayer::distilled) {
    if (const auto* obj = idx.object_for(exchange)) return obj->distill_text;
  }
  return idx.exchanges()[exchange].text();
}

/// Deterministic stand-in for an LLM grader. Grades by the fraction of the
/// query's content terms found in the snippet; each grader shifts the cut
/// points and perturbs a hash-selected share of items by one grade, and a
/// small hash-selected share of replies is malformed.
class MockGrader final : public TextProvider {
 public:
  MockGrader(std::string id, double offset, double jitter_rate = 0.15, double malformed_rate = 0.02)
      : id_(std::move(id)), offset_(offset), jitter_rate_(jitter_rate), malformed_rate_(malformed_rate) {}

  std::string name() const override { return "mock:" + id_; }

  std::string complete(std::string_view prompt) override {
    const auto query = between(prompt, "QUERY: \"", "\"\n");
    const auto snippet = between(prompt, "---\n", "\n---");
    const auto h = hash::mix64(hash::fnv1a64(id_ + '\x1F' + std::string(query) + '\x1F' + std::string(snippet)));
    if (unit(h) < malformed_rate_) return "I cannot grade this.";
    int g = overlap_grade(query, snippet, offset_);
    const double j = unit(hash::mix64(h));
    if (j < jitter_rate_ / 2) g = std::max(0, g - 1);
    else if (j < jitter_rate_) g = std::min(3, g + 1);
    return "{\"reason\": \"term overlap heuristic\", \"grade\": " + std::to_string(g) + "}";
  }

  /// 3 when every content term of the query occurs in the snippet, then 2 and
  /// 1 at two-thirds and one-third coverage (cut points moved by `offset`).
  static int overlap_grade(std::string_view query, std::string_view snippet, double offset = 0.0) {
    std::set<std::string> q;
    for (auto& t : index::split_terms(query)) {
      if (!index::stopwords().contains(t)) q.insert(std::move(t));
    }
    if (q.empty()) return 0;
    const auto s_terms = index::split_terms(snippet);
    const std::set<std::string> s(s_terms.begin(), s_terms.end());
    std::size_t hit = 0;
    for (const auto& t : q) hit += s.count(t);
    const double f = static_cast<double>(hit) / static_cast<double>(q.size());
    if (f >= 1.0 - std::max(0.0, -offset)) return 3;
    if (f >= 2.0 / 3.0 + offset) return 2;
    if (f >= 1.0 / 3.0 + offset) return 1;
    return 0;
  }

 private:
  static std::string_view between(std::string_view s, std::string_view open, std::string_view close) {
    const auto a = s.find(open);
    if (a == std::string_view::npos) return {};
    const auto b = s.find(close, a + open.size());
    return s.substr(a + open.size(), (b == std::string_view::npos ? s.size() : b) - a - open.size());
  }
  static double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0); }

  std::string id_;
  double offset_;
  double jitter_rate_;
  double malformed_rate_;
};

struct Grader {
  std::string id;
  TextProvider* provider = nullptr;
};

/// The default five-grader panel of mock graders.
inline std::vector<MockGrader> mock_panel() {
  return {MockGrader("mock-a", 0.0), MockGrader("mock-b", 0.05), MockGrader("mock-c", -0.05),
          MockGrader("mock-d", 0.1), MockGrader("mock-e", -0.1)};
}

struct GradingConfig {
  std::size_t truncate_chars = kDefaultGradeTruncation;
  std::size_t workers = 4;
};

/// One provider call per distinct (grader, query, result, snippet layer);
/// records are emitted per (query, config, result, grader) in input order.
/// `skip` holds "query\x1Fconfig\x1Fref\x1Fgrader" keys already stored.
inline std::vector<GradeRecord> grade_lists(std::span<const search::RankedList> lists,
                                            const std::map<std::string, Query>& queries,
                                            const index::LayerIndexes& idx, std::span<const Grader> graders,
                                            const GradingConfig& cfg = {},
                                            const std::set<std::string>& skip = {}) {
  using Key = std::tuple<std::size_t, std::string, std::uint32_t, SnippetLayer>;
  std::map<Key, std::size_t> slot;
  std::vector<Key> calls;
  struct Pending {
    std::size_t call;
    GradeRecord rec;
  };
  std::vector<Pending> pending;
  for (const auto& l : lists) {
    const auto q = queries.find(l.query_id);
    if (q == queries.end()) throw Error(ErrorKind::not_found, "run references unknown query " + l.query_id);
    const auto layer = snippet_layer_for_id(l.config_id);
    for (const auto& e : l.entries) {
      const auto ref = idx.exchanges()[e.exchange].ref();
      for (std::size_t g = 0; g < graders.size(); ++g) {
        const auto skip_key = l.query_id + '\x1F' + l.config_id + '\x1F' + ref + '\x1F' + graders[g].id;
        if (skip.count(skip_key)) continue;
        Key key{g, l.query_id, e.exchange, layer};
        auto [it, inserted] = slot.emplace(key, calls.size());
        if (inserted) calls.push_back(key);
        pending.push_back({it->second, {l.query_id, l.config_id, ref, graders[g].id, std::nullopt, "", true}});
      }
    }
  }
  std::vector<ParsedGrade> results(calls.size());
  parallel_for(calls.size(), cfg.workers, [&](std::size_t i) {
    const auto& [g, qid, exchange, layer] = calls[i];
    const auto prompt =
        build_grading_prompt(queries.at(qid).text, grading_snippet(idx, exchange, layer), cfg.truncate_chars, layer);
    try {
      results[i] = parse_grade(graders[g].provider->complete(prompt));
    } catch (const Error&) {
      results[i] = ParsedGrade{};
    }
  });
  std::vector<GradeRecord> out;
  out.reserve(pending.size());
  for (auto& p : pending) {
    const auto& r = results[p.call];
    p.rec.grade = r.grade;
    p.rec.reason = r.reason;
    p.rec.parse_failed = r.parse_failed;
    out.push_back(std::move(p.rec));
  }
  return out;
}

}  // namespace palace::eval
