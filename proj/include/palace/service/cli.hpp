#pragma once

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "palace/error.hpp"
#include "palace/service/config.hpp"
#include "palace/service/http.hpp"
#include "palace/service/pipeline.hpp"
#include "palace/service/synth.hpp"

namespace palace::service {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

inline void error_line(std::ostream& err, std::string_view kind, std::string_view message) {
  err << json({{"error", kind}, {"message", message}}).dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
}

}  // namespace detail

/// Parses argv and runs one subcommand. Results go to `out` as a single JSON
/// document; failures go to `err` as a one-line JSON error.
inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  CLI::App app{"palace: two-layer conversation memory with retrieval evaluation", "palace"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (defaults apply when omitted)");

  auto* synth = app.add_subcommand("synth", "write the deterministic synthetic corpus and queries");
  std::string synth_out = "synth";
  SynthConfig sc;
  synth->add_option("--out", synth_out, "output directory")->capture_default_str();
  synth->add_option("--conversations", sc.conversations)->capture_default_str();
  synth->add_option("--exchanges-per", sc.exchanges_per_conversation)->capture_default_str();
  synth->add_option("--queries", sc.queries)->capture_default_str();
  auto* synth_seed = synth->add_option("--seed", sc.seed, "defaults to seeds.synth");

  auto* ingest = app.add_subcommand("ingest", "segment a conversation log into the exchange store");
  std::string ingest_in;
  ingest->add_option("--in", ingest_in, "conversation log (defaults to paths.corpus)");

  auto* distill = app.add_subcommand("distill", "distill every complete exchange");
  auto* index = app.add_subcommand("index", "build and persist the layer indexes");

  auto* search = app.add_subcommand("search", "run one query under one config");
  std::string query, search_config = "full_text/exact/passthrough";
  std::size_t search_k = 0;
  bool rerank = false;
  double lambda = -1.0;
  search->add_option("query", query, "query text")->required();
  search->add_option("--with", search_config, "config id")->capture_default_str();
  search->add_option("--k", search_k, "result count (defaults to search.k)");
  search->add_flag("--rerank", rerank, "rerank the results by snippet BM25");
  search->add_option("--lambda", lambda, "rerank weight on the original score (defaults to search.lambda)");

  auto* sweep = app.add_subcommand("sweep", "run every config of a space over a query set");
  std::string space = "evaluated", queries_path;
  sweep->add_option("--space", space)->check(CLI::IsMember({"pure", "cross", "hybrid", "evaluated", "all"}))
      ->capture_default_str();
  sweep->add_option("--queries", queries_path, "queries jsonl")->required();

  auto* grade = app.add_subcommand("grade", "grade stored run entries with the grader panel");
  std::vector<std::string> graders;
  grade->add_option("--grader", graders, "grader spec, repeatable (defaults to providers.graders)");

  auto* consensus = app.add_subcommand("consensus", "reduce grades to consensus grades");
  auto* report = app.add_subcommand("report", "write report.json and report.md");

  auto* serve = app.add_subcommand("serve", "serve the read-only recall API");
  std::string host = "127.0.0.1";
  int port = 8765;
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << app.help();
    detail::error_line(err, "usage", e.what());
    return kExitUsage;
  }

  PipelineConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    cfg.validate();
  } catch (const std::exception& e) {
    detail::error_line(err, "usage", std::string("invalid config: ") + e.what());
    return kExitUsage;
  }

  const auto emit = [&](const json& j) { out << j.dump(2, ' ', false, json::error_handler_t::replace) << '\n'; };
  try {
    if (synth->parsed()) {
      if (!*synth_seed) sc.seed = cfg.seeds.synth;
      const auto s = generate_synth(sc);
      write_synth(synth_out, s);
      emit(s.manifest);
    } else if (ingest->parsed()) {
      emit(to_json(run_ingest(cfg, ingest_in.empty() ? cfg.paths.corpus : ingest_in)));
    } else if (distill->parsed()) {
      const auto s = run_distill(cfg);
      emit({{"objects", s.objects}, {"skipped", s.skipped}, {"distiller", s.distiller}});
    } else if (index->parsed()) {
      run_index(cfg);
      emit({{"index_dir", cfg.index_dir().string()}});
    } else if (search->parsed()) {
      const auto idx = load_indexes(cfg);
      ApiParams p;
      p.default_k = search_k ? search_k : cfg.search.k;
      p.snippet_chars = cfg.truncation.snippet_chars;
      p.engine = engine_params(cfg);
      const RecallApi api(idx, p);
      const auto r = api.search(query, search_config, "", rerank ? std::to_string(lambda >= 0.0 ? lambda : cfg.search.lambda) : "");
      if (r.status != 200) {
        detail::error_line(err, r.body.value("error", "error"), r.body.value("message", ""));
        return r.status == 404 ? kExitUsage : kExitFailure;
      }
      emit(r.body);
    } else if (sweep->parsed()) {
      const auto s = run_sweep(cfg, space, queries_path);
      emit({{"space", space}, {"configs", s.configs}, {"queries", s.queries}, {"entries", s.entries}});
    } else if (grade->parsed()) {
      const auto s = run_grade(cfg, graders.empty() ? cfg.providers.graders : graders);
      emit({{"new_records", s.new_records}, {"existing_records", s.existing_records}, {"graders", s.graders}});
    } else if (consensus->parsed()) {
      const auto s = run_consensus(cfg);
      emit({{"graded_pairs", s.graded_pairs},
            {"ungradeable", s.ungradeable},
            {"tiers",
             {{"unanimous", s.tiers.unanimous},
              {"strong", s.tiers.strong},
              {"weak", s.tiers.weak},
              {"escalated", s.tiers.escalated}}}});
    } else if (report->parsed()) {
      const auto r = run_report(cfg);
      emit({{"report_dir", cfg.report_dir().string()},
            {"metrics_rows", r.data["metrics"].size()},
            {"comparison_rows", r.data.contains("comparisons") ? r.data["comparisons"].size() : 0}});
    } else if (serve->parsed()) {
      const auto idx = load_indexes(cfg);
      ApiParams p;
      p.default_k = cfg.search.k;
      p.snippet_chars = cfg.truncation.snippet_chars;
      p.engine = engine_params(cfg);
      const RecallApi api(idx, p);
      httplib::Server server;
      mount(server, api);
      if (!server.bind_to_port(host, port)) throw Error(ErrorKind::io, "cannot bind " + host + ":" + std::to_string(port));
      err << "serving on http://" << host << ":" << port << '\n';
      server.listen_after_bind();
    }
  } catch (const Error& e) {
    detail::error_line(err, to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::config ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    detail::error_line(err, "internal", e.what());
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace palace::service
