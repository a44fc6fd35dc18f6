#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "palace/corpus/io.hpp"
#include "palace/corpus/segment.hpp"
#include "palace/corpus/stats.hpp"
#include "palace/corpus/tokenizer.hpp"
#include "palace/distill/distill.hpp"
#include "palace/distill/store.hpp"
#include "palace/eval/consensus.hpp"
#include "palace/eval/grading.hpp"
#include "palace/eval/metrics.hpp"
#include "palace/eval/report.hpp"
#include "palace/eval/vocab.hpp"
#include "palace/index/layers.hpp"
#include "palace/provider.hpp"
#include "palace/provider_http.hpp"
#include "palace/search/config.hpp"
#include "palace/search/engine.hpp"
#include "palace/search/runfile.hpp"
#include "palace/service/config.hpp"
#include "palace/service/store.hpp"
#include "palace/util/jsonl.hpp"
#include "palace/util/parallel.hpp"

namespace palace::service {

using nlohmann::json;

inline std::filesystem::path rank_file(const PipelineConfig& c) {
  if (!c.tokenizer_rank_file.empty()) return c.tokenizer_rank_file;
  if (const char* env = std::getenv("PALACE_CL100K_FILE"); env && *env) return env;
#ifdef PALACE_DEFAULT_CL100K_FILE
  return PALACE_DEFAULT_CL100K_FILE;
#else
  return {};
#endif
}

inline std::shared_ptr<corpus::TokenizerProvider> make_tokenizer(const PipelineConfig& c,
                                                                 std::vector<std::string>& warnings) {
  return corpus::make_tokenizer(c.tokenizer, rank_file(c), warnings);
}

/// "mock:<id>", "command:<cmd>" or "http://host:port/path#model".
inline std::unique_ptr<TextProvider> make_text_provider(const std::string& spec) {
  if (spec.rfind("mock:", 0) == 0) {
    const auto id = spec.substr(5);
    static const std::map<std::string, double> offsets = {
        {"mock-a", 0.0}, {"mock-b", 0.05}, {"mock-c", -0.05}, {"mock-d", 0.1}, {"mock-e", -0.1}};
    if (id == "escalator") return std::make_unique<eval::MockGrader>(id, 0.0, 0.0, 0.0);
    const auto it = offsets.find(id);
    return std::make_unique<eval::MockGrader>(id, it == offsets.end() ? 0.0 : it->second);
  }
  if (spec.rfind("command:", 0) == 0) return std::make_unique<CommandProvider>(spec.substr(8));
  if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
    const auto hash = spec.find('#');
    const auto url = spec.substr(0, hash);
    const auto model = hash == std::string::npos ? std::string() : spec.substr(hash + 1);
    const auto path_at = url.find('/', url.find("://") + 3);
    const auto base = path_at == std::string::npos ? url : url.substr(0, path_at);
    const auto path = path_at == std::string::npos ? std::string("/") : url.substr(path_at);
    return std::make_unique<HttpProvider>(base, path, model);
  }
  throw Error(ErrorKind::config, "unknown provider spec '" + spec + "'");
}

inline std::string grader_id(const std::string& spec) {
  return spec.rfind("mock:", 0) == 0 ? spec.substr(5) : spec;
}

inline std::shared_ptr<const index::EmbeddingProvider> make_embedder(const PipelineConfig& c) {
  const auto& spec = c.providers.embedder;
  if (spec == "hashing") return std::make_shared<index::HashingEmbedder>(c.providers.embedding_dimension);
  if (spec.rfind("command:", 0) == 0) {
    return std::make_shared<index::CommandEmbedder>(spec.substr(8), c.providers.embedding_dimension);
  }
  throw Error(ErrorKind::config, "unknown embedder '" + spec + "'");
}

inline index::IndexSettings index_settings(const PipelineConfig& c) {
  index::IndexSettings s;
  s.chunks = {c.search.chunk_size, c.search.chunk_overlap};
  s.hnsw.M = c.search.hnsw_m;
  s.hnsw.ef_construction = c.search.hnsw_ef_construction;
  s.hnsw.ef_search = c.search.hnsw_ef_search;
  s.hnsw.seed = c.seeds.hnsw;
  s.workers = c.workers.index;
  return s;
}

inline search::EngineParams engine_params(const PipelineConfig& c) {
  search::EngineParams p;
  p.k = c.search.k;
  p.signal_depth = c.search.signal_depth;
  p.rrf_k = c.search.rrf_k;
  return p;
}

struct IngestSummary {
  int conversations = 0;
  int messages = 0;
  int segmented = 0;
  int exchanges = 0;
  int dropped_short = 0;
  int fragments = 0;
  int incomplete = 0;
  std::string tokenizer;
  std::vector<std::string> warnings;
};

inline json to_json(const IngestSummary& s) {
  return {{"conversations", s.conversations}, {"messages", s.messages},   {"segmented", s.segmented},
          {"exchanges", s.exchanges},         {"dropped_short", s.dropped_short}, {"fragments", s.fragments},
          {"incomplete", s.incomplete},       {"tokenizer", s.tokenizer}, {"warnings", s.warnings}};
}

/// Conversation log -> corpus store (messages) and exchange store.
inline IngestSummary run_ingest(const PipelineConfig& cfg, const std::filesystem::path& input) {
  const StorePaths paths(cfg);
  StoreLock lock(paths.lock());
  IngestSummary s;
  const auto conversations = corpus::read_conversations(input);
  const corpus::SegmentConfig seg{cfg.segmentation.min_chars, cfg.segmentation.max_plies};
  const auto tokenizer = make_tokenizer(cfg, s.warnings);
  s.tokenizer = tokenizer->name();
  std::vector<json> message_rows;
  std::vector<corpus::Exchange> all;
  for (const auto& [cid, msgs] : conversations) {
    ++s.conversations;
    s.messages += static_cast<int>(msgs.size());
    for (const auto& m : msgs) message_rows.push_back(corpus::to_json(m));
    const auto segmented = corpus::segment_conversation(msgs, seg);
    s.segmented += static_cast<int>(segmented.size());
    for (const auto& ex : segmented) s.dropped_short += ex.char_len < seg.min_chars;
    for (auto& ex : corpus::filter_and_split(segmented, seg)) all.push_back(std::move(ex));
  }
  for (const auto& ex : all) {
    s.fragments += ex.is_fragment;
    s.incomplete += ex.incomplete;
  }
  std::vector<json> exchange_rows(all.size());
  parallel_for(all.size(), cfg.workers.distill, [&](std::size_t i) {
    all[i].token_len = static_cast<int>(tokenizer->count(all[i].text()));
    exchange_rows[i] = corpus::to_json(all[i]);
  });
  s.exchanges = static_cast<int>(all.size());
  jsonl::write(paths.corpus(), message_rows);
  jsonl::write(paths.exchanges(), exchange_rows);
  jsonl::write_text(paths.ingest_report(), to_json(s).dump(2) + "\n");
  return s;
}

inline std::vector<corpus::Exchange> load_exchanges(const StorePaths& paths) {
  const auto conversations = corpus::read_conversations(paths.corpus());
  return corpus::read_exchanges(paths.exchanges(), conversations);
}

struct DistillSummary {
  int objects = 0;
  int skipped = 0;
  std::string distiller;
};

inline DistillSummary run_distill(const PipelineConfig& cfg) {
  const StorePaths paths(cfg);
  StoreLock lock(paths.lock());
  const auto exchanges = load_exchanges(paths);
  std::vector<std::string> warnings;
  const auto tokenizer = make_tokenizer(cfg, warnings);
  distill::DistillConfig dc;
  dc.truncate_chars = cfg.truncation.distill_message_chars;
  dc.workers = cfg.workers.distill;
  std::unique_ptr<TextProvider> provider;
  std::unique_ptr<distill::Distiller> distiller;
  if (cfg.providers.distiller == "fallback") {
    distiller = std::make_unique<distill::FallbackDistiller>(exchanges, *tokenizer);
  } else {
    provider = make_text_provider(cfg.providers.distiller);
    distiller = std::make_unique<distill::LlmDistiller>(*provider, *tokenizer, dc);
  }
  const auto result = distill::distill_corpus(exchanges, *distiller, dc);
  distill::write_objects(paths.objects(), result.objects);
  distill::write_skip_list(paths.skip_list(), result.skipped);
  return {static_cast<int>(result.objects.size()), static_cast<int>(result.skipped.size()), distiller->name()};
}

inline void run_index(const PipelineConfig& cfg) {
  const StorePaths paths(cfg);
  StoreLock lock(paths.lock());
  auto exchanges = load_exchanges(paths);
  auto objects = distill::read_objects(paths.objects());
  const auto idx = index::LayerIndexes::build(index::ExchangeStore(std::move(exchanges)), std::move(objects),
                                              make_embedder(cfg), index_settings(cfg));
  idx.save(paths.index_dir);
}

/// Frozen indexes over the stores, rebuilt from persisted vectors.
inline index::LayerIndexes load_indexes(const PipelineConfig& cfg) {
  const StorePaths paths(cfg);
  auto exchanges = load_exchanges(paths);
  auto objects = distill::read_objects(paths.objects());
  return index::LayerIndexes::load(paths.index_dir, index::ExchangeStore(std::move(exchanges)), std::move(objects),
                                   make_embedder(cfg), index_settings(cfg));
}

inline std::vector<eval::Query> read_queries(const std::filesystem::path& path) {
  std::vector<eval::Query> out;
  std::set<std::string> seen;
  for (const auto& row : jsonl::read(path)) {
    auto q = eval::query_from_json(row);
    if (q.query_id.empty() || q.query_id.find_first_of("\t\n") != std::string::npos) {
      throw Error(ErrorKind::malformed_input, "query_id must be nonempty and free of tabs/newlines");
    }
    if (!seen.insert(q.query_id).second) throw Error(ErrorKind::malformed_input, "duplicate query_id " + q.query_id);
    out.push_back(std::move(q));
  }
  return out;
}

inline std::map<std::string, eval::Query> query_map(const std::vector<eval::Query>& qs) {
  std::map<std::string, eval::Query> m;
  for (const auto& q : qs) m[q.query_id] = q;
  return m;
}

struct SweepSummary {
  std::size_t configs = 0;
  std::size_t queries = 0;
  std::size_t entries = 0;
};

/// Runs every config of `space` for every query and writes one run file per
/// config plus a manifest. The query set is copied into the store.
inline SweepSummary run_sweep(const PipelineConfig& cfg, std::string_view space_name,
                              const std::filesystem::path& queries_path) {
  const auto space = search::parse_space(space_name);
  const StorePaths paths(cfg);
  StoreLock lock(paths.lock());
  const auto queries = read_queries(queries_path);
  std::vector<json> qrows;
  for (const auto& q : queries) qrows.push_back(eval::to_json(q));
  jsonl::write(paths.queries(), qrows);

  const auto idx = load_indexes(cfg);
  const search::SearchEngine engine(idx, engine_params(cfg));
  const auto configs = search::enumerate_configs(space);
  std::vector<std::vector<search::RankedList>> per_query(queries.size());
  parallel_for(queries.size(), cfg.workers.search, [&](std::size_t i) {
    auto pq = engine.prepare(queries[i].query_id, queries[i].text);
    per_query[i].reserve(configs.size());
    for (const auto& c : configs) per_query[i].push_back(engine.run(c, pq));
  });

  std::filesystem::remove_all(paths.runs_dir());
  std::filesystem::create_directories(paths.runs_dir());
  SweepSummary s{configs.size(), queries.size(), 0};
  std::vector<json> provenance;
  json ids = json::array();
  for (std::size_t c = 0; c < configs.size(); ++c) {
    std::vector<search::RankedList> lists;
    for (std::size_t q = 0; q < queries.size(); ++q) {
      s.entries += per_query[q][c].entries.size();
      lists.push_back(std::move(per_query[q][c]));
    }
    jsonl::write_text(paths.run_file(configs[c].id()), search::format_run(lists, idx.exchanges()));
    for (auto& row : search::provenance_rows(lists, idx.exchanges(), configs)) provenance.push_back(std::move(row));
    ids.push_back(configs[c].id());
  }
  jsonl::write(paths.runs_dir() / "provenance.jsonl", provenance);
  const json manifest = {{"space", space_name}, {"configs", ids}, {"queries", queries.size()},
                         {"k", cfg.search.k}, {"rrf_k", cfg.search.rrf_k}};
  jsonl::write_text(paths.run_manifest(), manifest.dump(2) + "\n");
  return s;
}

inline std::vector<std::string> run_config_ids(const StorePaths& paths) {
  const auto manifest = json::parse(jsonl::read_text(paths.run_manifest()));
  return manifest.at("configs").get<std::vector<std::string>>();
}

inline std::vector<search::RankedList> read_runs(const StorePaths& paths, const index::ExchangeStore& store) {
  std::vector<search::RankedList> out;
  for (const auto& id : run_config_ids(paths)) {
    for (auto& l : search::parse_run(jsonl::read_text(paths.run_file(id)), store)) out.push_back(std::move(l));
  }
  return out;
}

inline std::vector<eval::GradeRecord> read_grades(const std::filesystem::path& path) {
  std::vector<eval::GradeRecord> out;
  if (!std::filesystem::exists(path)) return out;
  for (const auto& row : jsonl::read(path)) out.push_back(eval::grade_from_json(row));
  return out;
}

struct GradeSummary {
  std::size_t new_records = 0;
  std::size_t existing_records = 0;
  std::vector<std::string> graders;
};

/// Appends grade records for every (run entry, grader) not already stored.
inline GradeSummary run_grade(const PipelineConfig& cfg, const std::vector<std::string>& grader_specs) {
  const StorePaths paths(cfg);
  StoreLock lock(paths.lock());
  const auto idx = load_indexes(cfg);
  const auto queries = query_map(read_queries(paths.queries()));
  const auto lists = read_runs(paths, idx.exchanges());
  const auto existing = read_grades(paths.grades());
  std::set<std::string> skip;
  for (const auto& r : existing) skip.insert(r.query_id + '\x1F' + r.config_id + '\x1F' + r.exchange_ref + '\x1F' + r.grader_id);

  std::vector<std::unique_ptr<TextProvider>> providers;
  std::vector<eval::Grader> graders;
  GradeSummary s;
  for (const auto& spec : grader_specs) {
    providers.push_back(make_text_provider(spec));
    graders.push_back({grader_id(spec), providers.back().get()});
    s.graders.push_back(grader_id(spec));
  }
  const auto records = eval::grade_lists(lists, queries, idx, graders,
                                         {cfg.truncation.snippet_chars, cfg.workers.grade}, skip);
  std::filesystem::create_directories(paths.root);
  std::ofstream out(paths.grades(), std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot append to " + paths.grades().string());
  for (const auto& r : records) out << eval::to_json(r).dump() << '\n';
  s.new_records = records.size();
  s.existing_records = existing.size();
  return s;
}

struct ConsensusSummary {
  std::size_t graded_pairs = 0;
  std::size_t ungradeable = 0;
  eval::TierCounts tiers;
};

inline ConsensusSummary run_consensus(const PipelineConfig& cfg) {
  const StorePaths paths(cfg);
  StoreLock lock(paths.lock());
  const auto records = read_grades(paths.grades());
  if (records.empty()) throw Error(ErrorKind::not_found, "no grade records in " + paths.grades().string());
  std::unique_ptr<TextProvider> escalator_provider;
  std::function<eval::EscalationFn(const eval::PairKey&)> escalator_for;
  std::optional<index::LayerIndexes> idx;
  std::map<std::string, eval::Query> queries;
  std::unique_ptr<eval::ProviderEscalator> escalator;
  if (!cfg.providers.escalator.empty()) {
    escalator_provider = make_text_provider(cfg.providers.escalator);
    idx = load_indexes(cfg);
    queries = query_map(read_queries(paths.queries()));
    escalator = std::make_unique<eval::ProviderEscalator>(*escalator_provider, queries, *idx,
                                                           cfg.truncation.snippet_chars);
    escalator_for = [&](const eval::PairKey& k) { return (*escalator)(k); };
  }
  const auto result = eval::consensus_all(records, escalator_for);
  std::vector<json> rows;
  for (const auto& g : result.grades) rows.push_back(eval::to_json(g));
  jsonl::write(paths.consensus(), rows);
  json ungradeable = json::array();
  for (const auto& k : result.ungradeable) ungradeable.push_back({k.query_id, k.config_id, k.exchange_ref});
  jsonl::write_text(paths.data_quality(), json({{"ungradeable", ungradeable},
                                                {"parse_failures_by_grader", result.parse_failures_by_grader}})
                                                  .dump(2) +
                                              "\n");
  return {result.grades.size(), result.ungradeable.size(), eval::tier_counts(result.grades)};
}

/// Grade-free retrieval of known targets: P@1 and MRR against the planted
/// target refs, overall and per query type.
inline json planted_target_metrics(std::span<const search::RankedList> lists,
                                   const std::map<std::string, eval::Query>& queries,
                                   const index::ExchangeStore& store) {
  struct Acc {
    double p1 = 0, rr = 0;
    int n = 0;
  };
  std::map<std::string, std::map<std::string, Acc>> acc;
  std::map<std::string, std::set<std::string>> seen;
  for (const auto& l : lists) {
    const auto q = queries.find(l.query_id);
    if (q == queries.end() || q->second.targets.empty()) continue;
    const std::set<std::string> targets(q->second.targets.begin(), q->second.targets.end());
    double p1 = 0, rr = 0;
    for (std::size_t i = 0; i < l.entries.size(); ++i) {
      if (targets.count(store[l.entries[i].exchange].ref())) {
        rr = 1.0 / static_cast<double>(i + 1);
        p1 = i == 0 ? 1.0 : 0.0;
        break;
      }
    }
    seen[l.config_id].insert(l.query_id);
    for (const auto& bucket : {std::string("all"), std::string(eval::to_string(q->second.query_type))}) {
      auto& a = acc[l.config_id][bucket];
      a.p1 += p1;
      a.rr += rr;
      ++a.n;
    }
  }
  // Queries with targets but no list for a config count as misses.
  for (auto& [cfg, buckets] : acc) {
    for (const auto& [qid, q] : queries) {
      if (q.targets.empty() || seen[cfg].count(qid)) continue;
      ++buckets["all"].n;
      ++buckets[std::string(eval::to_string(q.query_type))].n;
    }
  }
  json out = json::object();
  for (const auto& [cfg, buckets] : acc) {
    for (const auto& [bucket, a] : buckets) {
      out[cfg][bucket] = {{"p_at_1", a.n ? a.p1 / a.n : 0.0}, {"mrr", a.n ? a.rr / a.n : 0.0}, {"n", a.n}};
    }
  }
  return out;
}

inline eval::Report run_report(const PipelineConfig& cfg) {
  const StorePaths paths(cfg);
  StoreLock lock(paths.lock());
  auto exchanges = load_exchanges(paths);
  const auto objects = distill::read_objects(paths.objects());
  const index::ExchangeStore store(exchanges);
  const auto query_list = read_queries(paths.queries());
  const auto queries = query_map(query_list);
  const auto lists = read_runs(paths, store);
  const auto records = read_grades(paths.grades());
  std::vector<eval::ConsensusGrade> consensus;
  for (const auto& row : jsonl::read(paths.consensus())) consensus.push_back(eval::consensus_from_json(row));

  eval::ReportInputs in;
  in.runs = eval::join_grades(lists, consensus, [&](std::uint32_t id) { return store[id].ref(); });
  std::vector<std::string> qids;
  for (const auto& q : query_list) qids.push_back(q.query_id);
  eval::complete_runs(in.runs, run_config_ids(paths), qids);
  in.queries = queries;
  in.grades = records;
  in.consensus = consensus;
  if (std::filesystem::exists(paths.data_quality())) {
    const auto dq = json::parse(jsonl::read_text(paths.data_quality()));
    in.ungradeable = static_cast<int>(dq.at("ungradeable").size());
    in.parse_failures = dq.at("parse_failures_by_grader").get<std::map<std::string, int>>();
  }
  in.metric_options = {cfg.evaluation.strict_empty, cfg.evaluation.linear_gain};
  in.comparison_options = {cfg.evaluation.bootstrap_resamples, cfg.seeds.bootstrap};

  // Vocabulary survival over exchanges that have a distilled object, plus the
  // identity control where the distilled text is the verbatim text.
  std::vector<std::string> verbatim, query_texts;
  std::vector<distill::DistilledObject> paired, identity;
  for (const auto& o : objects) {
    const auto id = store.find(o.ref());
    if (!id) continue;
    verbatim.push_back(store[*id].text());
    paired.push_back(o);
    auto self = o;
    self.exchange_core = verbatim.back();
    self.specific_context.clear();
    self.distill_text = verbatim.back();
    identity.push_back(std::move(self));
  }
  for (const auto& q : query_list) query_texts.push_back(q.text);
  in.vocab = eval::vocab_survival(verbatim, paired, query_texts, cfg.evaluation.vocab_k);
  in.vocab_identity = eval::vocab_survival(verbatim, identity, query_texts, cfg.evaluation.vocab_k);

  std::vector<std::string> warnings;
  const auto tokenizer = make_tokenizer(cfg, warnings);
  std::vector<corpus::DistilledLength> lengths;
  for (const auto& o : objects) lengths.push_back({o.conversation_id, o.ply_start, o.ply_end, o.distill_text});
  if (!exchanges.empty() && !lengths.empty()) {
    const auto stats = corpus::compute_corpus_stats(exchanges, lengths, *tokenizer);
    in.compression = {stats.ratio_from_totals, stats.ratio_per_item, stats.n_distilled - stats.n_unpaired};
  }

  in.constants = to_json(cfg);
  in.constants["tokenizer_resolved"] = tokenizer->name();
  in.constants["bootstrap_resamples"] = cfg.evaluation.bootstrap_resamples;
  in.constants["bonferroni_family_alpha"] = eval::kFamilyAlpha;
  in.constants["normal_z"] = eval::kZ95;
  in.constants["wilcoxon_exact_max_n"] = eval::kWilcoxonExactMax;
  in.constants["warnings"] = warnings;

  auto report = eval::build_report(in);
  report.data["config_ids"] = run_config_ids(paths);
  report.data["planted_targets"] = planted_target_metrics(lists, queries, store);
  if (std::filesystem::exists(paths.ingest_report())) {
    report.data["ingest"] = json::parse(jsonl::read_text(paths.ingest_report()));
  }
  std::filesystem::create_directories(paths.report_dir);
  jsonl::write_text(paths.report_dir / "report.json", report.data.dump(2) + "\n");
  jsonl::write_text(paths.report_dir / "report.md", report.rendered);
  return report;
}

}  // namespace palace::service
