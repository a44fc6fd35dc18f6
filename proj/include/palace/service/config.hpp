#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "palace/error.hpp"
#include "palace/util/jsonl.hpp"

namespace palace::service {

using nlohmann::json;

/// Everything a pipeline run depends on. Serialized whole into every report.
struct PipelineConfig {
  struct Paths {
    std::string corpus = "logs.jsonl";  // input conversation log
    std::string store = "palace_store";
    std::string indexes;  // empty: <store>/index
    std::string reports;  // empty: <store>/report
  } paths;

  struct Segmentation {
    int min_chars = 200;
    int max_plies = 20;
  } segmentation;

  struct Providers {
    // "fallback", "mock:<id>", "command:<cmd>" or "http(s)://host/path#<model>"
    std::string distiller = "fallback";
    // "hashing" or "command:<cmd>"
    std::string embedder = "hashing";
    std::size_t embedding_dimension = 384;
    // each "mock:<id>", "command:<cmd>" or "http(s)://host/path#<model>"
    std::vector<std::string> graders = {"mock:mock-a", "mock:mock-b", "mock:mock-c", "mock:mock-d", "mock:mock-e"};
    // same forms as a grader, or empty for no escalation
    std::string escalator = "mock:escalator";
  } providers;

  std::string tokenizer = "cl100k_base";
  std::string tokenizer_rank_file;

  struct Search {
    std::size_t k = 7;
    std::size_t signal_depth = 0;
    double rrf_k = 60.0;
    double lambda = 0.7;
    std::size_t chunk_size = 2000;
    std::size_t chunk_overlap = 200;
    std::uint32_t hnsw_m = 16;
    std::uint32_t hnsw_ef_construction = 200;
    std::uint32_t hnsw_ef_search = 100;
  } search;

  struct Truncation {
    std::size_t distill_message_chars = 2000;
    std::size_t snippet_chars = 1200;
  } truncation;

  struct Seeds {
    std::uint64_t synth = 1;
    std::uint64_t hnsw = 42;
    std::uint64_t bootstrap = 20240607;
    std::uint64_t sampler = 7;
  } seeds;

  struct Workers {
    std::size_t distill = 4;
    std::size_t index = 4;
    std::size_t search = 4;
    std::size_t grade = 4;
  } workers;

  struct Evaluation {
    bool strict_empty = true;
    bool linear_gain = false;
    int bootstrap_resamples = 10000;
    std::size_t vocab_k = 10;
  } evaluation;

  std::filesystem::path store_dir() const { return paths.store; }
  std::filesystem::path index_dir() const {
    return paths.indexes.empty() ? store_dir() / "index" : std::filesystem::path(paths.indexes);
  }
  std::filesystem::path report_dir() const {
    return paths.reports.empty() ? store_dir() / "report" : std::filesystem::path(paths.reports);
  }

  void validate() const {
    if (segmentation.max_plies < 2) throw Error(ErrorKind::config, "segmentation.max_plies must be >= 2");
    if (segmentation.min_chars < 0) throw Error(ErrorKind::config, "segmentation.min_chars must be >= 0");
    if (search.k == 0) throw Error(ErrorKind::config, "search.k must be >= 1");
    if (search.rrf_k <= 0) throw Error(ErrorKind::config, "search.rrf_k must be > 0");
    if (search.lambda < 0 || search.lambda > 1) throw Error(ErrorKind::config, "search.lambda must be in [0,1]");
    if (search.hnsw_ef_search < search.k) throw Error(ErrorKind::config, "search.hnsw_ef_search must be >= k");
    if (providers.embedding_dimension == 0) throw Error(ErrorKind::config, "providers.embedding_dimension must be > 0");
    if (evaluation.vocab_k == 0) throw Error(ErrorKind::config, "evaluation.vocab_k must be >= 1");
    if (evaluation.bootstrap_resamples < 1) throw Error(ErrorKind::config, "evaluation.bootstrap_resamples must be >= 1");
    if (tokenizer != "cl100k_base" && tokenizer != "whitespace") {
      throw Error(ErrorKind::config, "tokenizer must be cl100k_base or whitespace");
    }
    const auto text_spec = [](const std::string& s) {
      return s.rfind("mock:", 0) == 0 || s.rfind("command:", 0) == 0 || s.rfind("http://", 0) == 0 ||
             s.rfind("https://", 0) == 0;
    };
    if (providers.distiller != "fallback" && !text_spec(providers.distiller)) {
      throw Error(ErrorKind::config, "providers.distiller must be fallback, mock:, command: or an http(s) url");
    }
    if (providers.embedder != "hashing" && providers.embedder.rfind("command:", 0) != 0) {
      throw Error(ErrorKind::config, "providers.embedder must be hashing or command:");
    }
    if (providers.graders.empty()) throw Error(ErrorKind::config, "providers.graders must not be empty");
    for (const auto& g : providers.graders) {
      if (!text_spec(g)) throw Error(ErrorKind::config, "bad grader spec '" + g + "'");
    }
    if (!providers.escalator.empty() && !text_spec(providers.escalator)) {
      throw Error(ErrorKind::config, "bad escalator spec '" + providers.escalator + "'");
    }
  }
};

namespace detail {

/// Rejects any key of `j` that is not in `known`.
inline void check_keys(const json& j, std::string_view section, std::initializer_list<std::string_view> known) {
  if (!j.is_object()) throw Error(ErrorKind::config, std::string(section) + " must be an object");
  const std::set<std::string_view> allowed(known);
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw Error(ErrorKind::config, "unknown config key '" + std::string(section) + (section.empty() ? "" : ".") + key + "'");
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out, std::string_view section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::config, "config key '" + std::string(section) + "." + key + "' has the wrong type");
  }
}

}  // namespace detail

inline json to_json(const PipelineConfig& c) {
  return {
      {"paths", {{"corpus", c.paths.corpus}, {"store", c.paths.store}, {"indexes", c.paths.indexes}, {"reports", c.paths.reports}}},
      {"segmentation", {{"min_chars", c.segmentation.min_chars}, {"max_plies", c.segmentation.max_plies}}},
      {"providers",
       {{"distiller", c.providers.distiller},
        {"embedder", c.providers.embedder},
        {"embedding_dimension", c.providers.embedding_dimension},
        {"graders", c.providers.graders},
        {"escalator", c.providers.escalator}}},
      {"tokenizer", c.tokenizer},
      {"tokenizer_rank_file", c.tokenizer_rank_file},
      {"search",
       {{"k", c.search.k},
        {"signal_depth", c.search.signal_depth},
        {"rrf_k", c.search.rrf_k},
        {"lambda", c.search.lambda},
        {"chunk_size", c.search.chunk_size},
        {"chunk_overlap", c.search.chunk_overlap},
        {"hnsw_m", c.search.hnsw_m},
        {"hnsw_ef_construction", c.search.hnsw_ef_construction},
        {"hnsw_ef_search", c.search.hnsw_ef_search}}},
      {"truncation",
       {{"distill_message_chars", c.truncation.distill_message_chars}, {"snippet_chars", c.truncation.snippet_chars}}},
      {"seeds",
       {{"synth", c.seeds.synth}, {"hnsw", c.seeds.hnsw}, {"bootstrap", c.seeds.bootstrap}, {"sampler", c.seeds.sampler}}},
      {"workers",
       {{"distill", c.workers.distill}, {"index", c.workers.index}, {"search", c.workers.search}, {"grade", c.workers.grade}}},
      {"evaluation",
       {{"strict_empty", c.evaluation.strict_empty},
        {"linear_gain", c.evaluation.linear_gain},
        {"bootstrap_resamples", c.evaluation.bootstrap_resamples},
        {"vocab_k", c.evaluation.vocab_k}}},
  };
}

/// Missing keys keep their defaults; unknown keys are an error.
inline PipelineConfig config_from_json(const json& j) {
  using detail::check_keys;
  using detail::read;
  PipelineConfig c;
  check_keys(j, "", {"paths", "segmentation", "providers", "tokenizer", "tokenizer_rank_file", "search", "truncation",
                     "seeds", "workers", "evaluation"});
  read(j, "tokenizer", c.tokenizer, "");
  read(j, "tokenizer_rank_file", c.tokenizer_rank_file, "");
  if (j.contains("paths")) {
    const auto& s = j["paths"];
    check_keys(s, "paths", {"corpus", "store", "indexes", "reports"});
    read(s, "corpus", c.paths.corpus, "paths");
    read(s, "store", c.paths.store, "paths");
    read(s, "indexes", c.paths.indexes, "paths");
    read(s, "reports", c.paths.reports, "paths");
  }
  if (j.contains("segmentation")) {
    const auto& s = j["segmentation"];
    check_keys(s, "segmentation", {"min_chars", "max_plies"});
    read(s, "min_chars", c.segmentation.min_chars, "segmentation");
    read(s, "max_plies", c.segmentation.max_plies, "segmentation");
  }
  if (j.contains("providers")) {
    const auto& s = j["providers"];
    check_keys(s, "providers", {"distiller", "embedder", "embedding_dimension", "graders", "escalator"});
    read(s, "distiller", c.providers.distiller, "providers");
    read(s, "embedder", c.providers.embedder, "providers");
    read(s, "embedding_dimension", c.providers.embedding_dimension, "providers");
    read(s, "graders", c.providers.graders, "providers");
    read(s, "escalator", c.providers.escalator, "providers");
  }
  if (j.contains("search")) {
    const auto& s = j["search"];
    check_keys(s, "search", {"k", "signal_depth", "rrf_k", "lambda", "chunk_size", "chunk_overlap", "hnsw_m",
                             "hnsw_ef_construction", "hnsw_ef_search"});
    read(s, "k", c.search.k, "search");
    read(s, "signal_depth", c.search.signal_depth, "search");
    read(s, "rrf_k", c.search.rrf_k, "search");
    read(s, "lambda", c.search.lambda, "search");
    read(s, "chunk_size", c.search.chunk_size, "search");
    read(s, "chunk_overlap", c.search.chunk_overlap, "search");
    read(s, "hnsw_m", c.search.hnsw_m, "search");
    read(s, "hnsw_ef_construction", c.search.hnsw_ef_construction, "search");
    read(s, "hnsw_ef_search", c.search.hnsw_ef_search, "search");
  }
  if (j.contains("truncation")) {
    const auto& s = j["truncation"];
    check_keys(s, "truncation", {"distill_message_chars", "snippet_chars"});
    read(s, "distill_message_chars", c.truncation.distill_message_chars, "truncation");
    read(s, "snippet_chars", c.truncation.snippet_chars, "truncation");
  }
  if (j.contains("seeds")) {
    const auto& s = j["seeds"];
    check_keys(s, "seeds", {"synth", "hnsw", "bootstrap", "sampler"});
    read(s, "synth", c.seeds.synth, "seeds");
    read(s, "hnsw", c.seeds.hnsw, "seeds");
    read(s, "bootstrap", c.seeds.bootstrap, "seeds");
    read(s, "sampler", c.seeds.sampler, "seeds");
  }
  if (j.contains("workers")) {
    const auto& s = j["workers"];
    check_keys(s, "workers", {"distill", "index", "search", "grade"});
    read(s, "distill", c.workers.distill, "workers");
    read(s, "index", c.workers.index, "workers");
    read(s, "search", c.workers.search, "workers");
    read(s, "grade", c.workers.grade, "workers");
  }
  if (j.contains("evaluation")) {
    const auto& s = j["evaluation"];
    check_keys(s, "evaluation", {"strict_empty", "linear_gain", "bootstrap_resamples", "vocab_k"});
    read(s, "strict_empty", c.evaluation.strict_empty, "evaluation");
    read(s, "linear_gain", c.evaluation.linear_gain, "evaluation");
    read(s, "bootstrap_resamples", c.evaluation.bootstrap_resamples, "evaluation");
    read(s, "vocab_k", c.evaluation.vocab_k, "evaluation");
  }
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  const auto body = jsonl::read_text(path);
  const auto j = json::parse(body, nullptr, false, true);
  if (j.is_discarded()) throw Error(ErrorKind::config, "config file is not valid JSON: " + path.string());
  return config_from_json(j);
}

}  // namespace palace::service
