#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "palace/corpus/io.hpp"
#include "palace/corpus/types.hpp"
#include "palace/eval/sampler.hpp"
#include "palace/eval/types.hpp"
#include "palace/util/jsonl.hpp"

namespace palace::service {

struct SynthConfig {
  std::size_t conversations = 500;
  int exchanges_per_conversation = 2;
  std::size_t queries = 50;
  std::uint64_t seed = 1;
  double tool_round_trip_rate = 0.3;
};

struct SynthTopic {
  const char* key;
  const char* label;
  std::array<const char*, 4> words;
  const char* fix;
};

inline constexpr SynthTopic kSynthTopics[] = {
    {"connection_pool", "connection pooling", {"pool", "connection", "timeout", "database"}, "raised the pool size and added a bounded retry"},
    {"auth_tokens", "token refresh", {"token", "refresh", "expiry", "session"}, "moved the refresh ahead of the expiry check"},
    {"schema_migration", "schema migrations", {"migration", "schema", "column", "rollback"}, "split the migration into two reversible steps"},
    {"flaky_tests", "flaky tests", {"test", "flaky", "fixture", "clock"}, "replaced the sleep with a fake clock"},
    {"cache_invalidation", "cache invalidation", {"cache", "stale", "invalidate", "key"}, "versioned the cache key on every write"},
    {"memory_leak", "memory leaks", {"memory", "leak", "heap", "allocation"}, "released the buffer in the finally block"},
    {"rate_limiting", "rate limiting", {"rate", "limit", "burst", "quota"}, "switched to a token bucket with a larger burst"},
    {"docker_build", "container builds", {"docker", "image", "layer", "build"}, "reordered the layers so dependencies cache"},
    {"logging_format", "structured logging", {"logging", "format", "json", "field"}, "emitted one json object per line"},
    {"race_condition", "race conditions", {"race", "lock", "thread", "mutex"}, "guarded the shared map with a mutex"},
    {"dependency_pin", "dependency pinning", {"dependency", "version", "pin", "lockfile"}, "pinned the transitive version in the lockfile"},
    {"search_ranking", "search ranking", {"ranking", "score", "query", "index"}, "normalized the scores before fusing"},
    {"ci_pipeline", "CI pipelines", {"pipeline", "ci", "stage", "artifact"}, "cached the artifact between stages"},
    {"unicode_handling", "unicode handling", {"unicode", "encoding", "utf8", "byte"}, "decoded the bytes as utf8 before slicing"},
    {"config_loading", "config loading", {"config", "environment", "default", "override"}, "applied environment overrides after defaults"},
    {"http_retries", "HTTP retries", {"http", "retry", "backoff", "status"}, "added exponential backoff on 503 status"},
    {"date_parsing", "date parsing", {"date", "timezone", "parse", "offset"}, "parsed every timestamp with an explicit offset"},
    {"file_watcher", "file watching", {"watcher", "file", "event", "debounce"}, "debounced the events by 200 ms"},
    {"queue_backpressure", "queue backpressure", {"queue", "consumer", "backpressure", "batch"}, "capped the batch size per consumer"},
    {"permission_errors", "permission errors", {"permission", "denied", "owner", "chmod"}, "fixed the owner before the chmod"},
};

inline constexpr const char* kSynthSyllables[] = {"ka", "zor", "vel", "mi", "thra", "qu", "lin", "dex",
                                                  "yor", "pha", "gri", "nu", "sel", "tor", "bex", "wy"};

inline constexpr std::pair<const char*, double> kSynthProjects[] = {
    {"atlas", 0.4}, {"borealis", 0.3}, {"cinder", 0.2}, {"dune", 0.1}};

/// One generated exchange and the tokens planted in it.
struct SynthExchange {
  std::string ref;
  std::string project;
  std::size_t topic = 0;
  std::string term;       // unique to this exchange
  std::string file;       // unique path
  std::string file_stem;  // unique token inside the path
};

struct SynthCorpus {
  std::vector<corpus::Message> messages;
  std::vector<SynthExchange> exchanges;
  std::vector<eval::Query> queries;
  nlohmann::json manifest;
};

namespace detail {

class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : rng_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  double unit() { return static_cast<double>(rng_() >> 11) * (1.0 / 9007199254740992.0); }
  template <class T, std::size_t N>
  const T& pick(const T (&a)[N]) { return a[below(N)]; }
  template <class T>
  const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline std::string pseudoword(SynthRng& rng, std::set<std::string>& used, bool digits) {
  for (;;) {
    std::string w;
    const std::size_t n = 3 + rng.below(2);
    for (std::size_t i = 0; i < n; ++i) w += rng.pick(kSynthSyllables);
    if (digits) w += std::to_string(10 + rng.below(90));
    if (used.insert(w).second) return w;
  }
}

inline std::string fill(std::string tmpl, const std::map<std::string, std::string>& vars) {
  for (const auto& [k, v] : vars) {
    const std::string key = "{" + k + "}";
    for (std::size_t at; (at = tmpl.find(key)) != std::string::npos;) tmpl.replace(at, key.size(), v);
  }
  return tmpl;
}

inline const std::vector<std::string>& user_templates() {
  static const std::vector<std::string> t = {
      "In the {project} service the {w0} {w1} keeps failing with {term} whenever {file} loads. The {w2} looks fine "
      "but the {w3} handling breaks right after a deploy. Any idea what is going on?",
      "Seeing {term} again in {project}. It shows up when {file} touches the {w0} and the {w1} code path. I checked "
      "the {w2} settings and nothing changed there. Can you dig into the {w3} side?",
      "Quick one for {project}: {file} throws {term} under load. My guess is the {w1} or the {w0}, since the {w3} "
      "metrics spike at the same time. What would you look at first?",
  };
  return t;
}

inline const std::vector<std::string>& answer_templates() {
  static const std::vector<std::string> t = {
      "The {term} error comes from {file}: the {w0} {w1} path never releases the {w2}. I {fix} and reran the suite; "
      "{term} no longer appears. Keep an eye on {file} if the {w3} handling regresses.",
      "Found it. {file} holds the {w2} across the {w0} call, so {term} fires once the {w1} saturates. I {fix}. After "
      "the change the {w3} numbers are flat and {term} is gone from the logs.",
      "Root cause: {term} is raised in {file} when the {w1} check runs before the {w0} is ready. I {fix}, then added "
      "a regression test around the {w3} and the {w2}. {term} should not come back.",
  };
  return t;
}

inline const std::vector<std::string>& filler_sentences() {
  static const std::vector<std::string> t = {
      "Thanks, that helps.", "Let me know if you need more logs.", "This started last week.",
      "The staging environment behaves the same way.", "I already restarted the service twice.",
      "Nothing obvious in the dashboards.",
  };
  return t;
}

}  // namespace detail

/// Deterministic synthetic conversation log with known recall targets.
/// Every exchange plants a unique term and a unique file path; exact-term
/// and phrase queries target one exchange, conceptual queries every exchange
/// of a topic within a project.
inline SynthCorpus generate_synth(const SynthConfig& cfg = {}) {
  detail::SynthRng rng(cfg.seed);
  SynthCorpus out;
  std::set<std::string> used;
  std::map<std::string, double> weights;
  for (const auto& [name, w] : kSynthProjects) weights[name] = w;
  const auto alloc = eval::proportional_allocation(weights, cfg.conversations);
  std::vector<std::string> project_of;
  for (const auto& [name, w] : kSynthProjects) {
    for (std::size_t i = 0; i < alloc.at(name); ++i) project_of.push_back(name);
  }
  std::shuffle(project_of.begin(), project_of.end(), rng.engine());

  std::size_t substantive = 0, tool_only = 0;
  for (std::size_t c = 0; c < cfg.conversations; ++c) {
    char cid[32];
    std::snprintf(cid, sizeof cid, "conv-%04zu", c);
    const auto& project = project_of[c];
    int ply = 0;
    auto emit = [&](corpus::Role role, std::string text, bool tool) {
      corpus::Message m;
      m.conversation_id = cid;
      m.project_id = project;
      m.ply_index = ply++;
      m.role = role;
      m.text = std::move(text);
      m.is_tool_only = tool;
      (tool ? tool_only : substantive)++;
      out.messages.push_back(std::move(m));
    };
    for (int e = 0; e < cfg.exchanges_per_conversation; ++e) {
      SynthExchange sx;
      sx.project = project;
      sx.topic = rng.below(std::size(kSynthTopics));
      sx.term = detail::pseudoword(rng, used, true);
      sx.file_stem = detail::pseudoword(rng, used, false);
      const auto& topic = kSynthTopics[sx.topic];
      sx.file = std::string("src/") + topic.key + "/" + sx.file_stem + ".py";
      const std::map<std::string, std::string> vars = {
          {"project", project}, {"term", sx.term},        {"file", sx.file},         {"w0", topic.words[0]},
          {"w1", topic.words[1]}, {"w2", topic.words[2]}, {"w3", topic.words[3]}, {"fix", topic.fix}};
      const int start = ply;
      std::string question = detail::fill(rng.pick(detail::user_templates()), vars);
      if (rng.unit() < 0.5) question += " " + rng.pick(detail::filler_sentences());
      emit(corpus::Role::user, question, false);
      if (rng.unit() < cfg.tool_round_trip_rate) {
        emit(corpus::Role::assistant, "[tool_use read_file " + sx.file + "]", true);
        emit(corpus::Role::user, "[tool_result " + std::to_string(40 + rng.below(400)) + " lines]", true);
      }
      emit(corpus::Role::assistant, detail::fill(rng.pick(detail::answer_templates()), vars), false);
      sx.ref = std::string(cid) + ":" + std::to_string(start) + "-" + std::to_string(ply - 1);
      out.exchanges.push_back(std::move(sx));
    }
  }

  // Queries: 40% exact-term, 30% phrase, the rest conceptual.
  std::vector<std::size_t> order(out.exchanges.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const std::size_t n_exact = cfg.queries * 2 / 5, n_phrase = cfg.queries * 3 / 10;
  std::map<std::string, int> type_counts;
  for (std::size_t i = 0; i < cfg.queries && i < order.size(); ++i) {
    const auto& sx = out.exchanges[order[i]];
    const auto& topic = kSynthTopics[sx.topic];
    char qid[32];
    std::snprintf(qid, sizeof qid, "q%03zu", i + 1);
    eval::Query q;
    q.query_id = qid;
    q.project_group = sx.project;
    if (i < n_exact) {
      q.query_type = eval::QueryType::exact_term;
      q.text = sx.term + " " + sx.file_stem;
      q.targets = {sx.ref};
    } else if (i < n_exact + n_phrase) {
      q.query_type = eval::QueryType::phrase;
      q.text = std::string(topic.words[0]) + " " + topic.words[1] + " in " + sx.file_stem;
      q.targets = {sx.ref};
    } else {
      q.query_type = eval::QueryType::conceptual;
      q.text = std::string("how did we fix ") + topic.label + " problems in " + sx.project;
      for (const auto& other : out.exchanges) {
        if (other.topic == sx.topic && other.project == sx.project) q.targets.push_back(other.ref);
      }
    }
    ++type_counts[std::string(eval::to_string(q.query_type))];
    out.queries.push_back(std::move(q));
  }

  std::map<std::string, int> project_counts;
  for (const auto& p : project_of) ++project_counts[p];
  out.manifest = {{"generator", "palace-synth"},
                  {"version", 1},
                  {"seed", cfg.seed},
                  {"conversations", cfg.conversations},
                  {"expected_exchanges", out.exchanges.size()},
                  {"messages", out.messages.size()},
                  {"substantive_messages", substantive},
                  {"tool_only_messages", tool_only},
                  {"projects", project_counts},
                  {"queries", type_counts}};
  return out;
}

/// Writes logs.jsonl, queries.jsonl, targets.jsonl and manifest.json.
inline void write_synth(const std::filesystem::path& dir, const SynthCorpus& s) {
  std::vector<nlohmann::json> rows;
  rows.reserve(s.messages.size());
  for (const auto& m : s.messages) rows.push_back(corpus::to_json(m));
  jsonl::write(dir / "logs.jsonl", rows);
  rows.clear();
  for (const auto& q : s.queries) rows.push_back(eval::to_json(q));
  jsonl::write(dir / "queries.jsonl", rows);
  rows.clear();
  for (const auto& x : s.exchanges) {
    rows.push_back({{"exchange_ref", x.ref}, {"project", x.project}, {"topic", kSynthTopics[x.topic].key},
                    {"term", x.term}, {"file", x.file}});
  }
  jsonl::write(dir / "targets.jsonl", rows);
  jsonl::write_text(dir / "manifest.json", s.manifest.dump(2) + "\n");
}

}  // namespace palace::service
