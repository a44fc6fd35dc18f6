#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "palace/eval/grading.hpp"
#include "palace/eval/types.hpp"

namespace palace::eval {

/// Called at most once per pair, only when no grade holds a strict majority.
/// Returns the sixth vote, or nothing when the escalator is unavailable or its
/// reply does not parse.
using EscalationFn = std::function<std::optional<int>()>;

inline int valid_count(const Histogram& h) { return h[0] + h[1] + h[2] + h[3]; }

inline Tier tier_for(int top, int n) {
  if (top == n) return Tier::unanimous;
  if (top * 5 >= n * 4) return Tier::strong;
  return Tier::weak;
}

/// Majority vote over the valid grades. Without a strict majority the pair is
/// escalated: the sixth vote joins the count, the strict plurality wins and a
/// remaining tie goes to the lowest tied grade. Returns nothing for zero
/// valid votes.
inline std::optional<ConsensusGrade> consensus(const Histogram& votes, const EscalationFn& escalate = {}) {
  const int n = valid_count(votes);
  if (n == 0) return std::nullopt;
  ConsensusGrade out;
  out.votes = votes;
  for (int g = 0; g < 4; ++g) {
    if (2 * votes[g] > n) {
      out.grade = g;
      out.tier = tier_for(votes[g], n);
      return out;
    }
  }
  Histogram recount = votes;
  if (escalate) {
    if (const auto v = escalate(); v && *v >= 0 && *v <= 3) {
      out.escalation_vote = v;
      ++recount[*v];
    }
  }
  int best = 0;
  for (int g = 1; g < 4; ++g) {
    if (recount[g] > recount[best]) best = g;
  }
  out.grade = best;
  out.tier = Tier::escalated;
  return out;
}

inline std::optional<ConsensusGrade> consensus(std::span<const int> votes, const EscalationFn& escalate = {}) {
  Histogram h{};
  for (const int v : votes) {
    if (v < 0 || v > 3) throw Error(ErrorKind::malformed_input, "vote outside 0..3: " + std::to_string(v));
    ++h[v];
  }
  return consensus(h, escalate);
}

struct PairKey {
  std::string query_id;
  std::string config_id;
  std::string exchange_ref;
  auto operator<=>(const PairKey&) const = default;
};

struct ConsensusResult {
  std::vector<ConsensusGrade> grades;
  std::vector<PairKey> ungradeable;
  std::map<std::string, int> parse_failures_by_grader;
};

/// Groups grade records by (query, config, result) and applies consensus.
/// `escalator_for` builds the escalation callback for a pair (may be empty).
inline ConsensusResult consensus_all(std::span<const GradeRecord> records,
                                     const std::function<EscalationFn(const PairKey&)>& escalator_for = {}) {
  std::map<PairKey, Histogram> groups;
  ConsensusResult out;
  for (const auto& r : records) {
    auto& h = groups[{r.query_id, r.config_id, r.exchange_ref}];
    if (r.grade) ++h[*r.grade];
    else ++out.parse_failures_by_grader[r.grader_id];
  }
  for (const auto& [key, h] : groups) {
    const auto c = consensus(h, escalator_for ? escalator_for(key) : EscalationFn{});
    if (!c) {
      out.ungradeable.push_back(key);
      continue;
    }
    auto g = *c;
    g.query_id = key.query_id;
    g.config_id = key.config_id;
    g.exchange_ref = key.exchange_ref;
    out.grades.push_back(std::move(g));
  }
  return out;
}

/// Escalation through a text provider using the calibrated prompt variant.
/// Replies are cached per (query, result, snippet layer) so a pair shared by
/// several configurations is asked once.
class ProviderEscalator {
 public:
  ProviderEscalator(TextProvider& provider, const std::map<std::string, Query>& queries,
                    const index::LayerIndexes& idx, std::size_t truncate_chars = kDefaultGradeTruncation)
      : provider_(provider), queries_(queries), idx_(idx), truncate_(truncate_chars) {}

  EscalationFn operator()(const PairKey& key) {
    return [this, key]() -> std::optional<int> {
      const auto layer = snippet_layer_for_id(key.config_id);
      const auto cache_key = std::make_tuple(key.query_id, key.exchange_ref, layer);
      if (const auto it = cache_.find(cache_key); it != cache_.end()) return it->second;
      const auto q = queries_.find(key.query_id);
      const auto ex = idx_.exchanges().find(key.exchange_ref);
      if (q == queries_.end() || !ex) return cache_[cache_key] = std::nullopt;
      const auto prompt =
          build_grading_prompt(q->second.text, grading_snippet(idx_, *ex, layer), truncate_, layer, true);
      std::optional<int> vote;
      try {
        vote = parse_grade(provider_.complete(prompt)).grade;
      } catch (const Error&) {
      }
      return cache_[cache_key] = vote;
    };
  }

 private:
  TextProvider& provider_;
  const std::map<std::string, Query>& queries_;
  const index::LayerIndexes& idx_;
  std::size_t truncate_;
  std::map<std::tuple<std::string, std::string, SnippetLayer>, std::optional<int>> cache_;
};

struct TierCounts {
  int unanimous = 0;
  int strong = 0;
  int weak = 0;
  int escalated = 0;
  int total() const { return unanimous + strong + weak + escalated; }
};

inline TierCounts tier_counts(std::span<const ConsensusGrade> grades) {
  TierCounts t;
  for (const auto& g : grades) {
    switch (g.tier) {
      case Tier::unanimous: ++t.unanimous; break;
      case Tier::strong: ++t.strong; break;
      case Tier::weak: ++t.weak; break;
      case Tier::escalated: ++t.escalated; break;
    }
  }
  return t;
}

}  // namespace palace::eval
