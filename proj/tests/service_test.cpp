#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "palace/service/cli.hpp"
#include "palace/service/config.hpp"
#include "palace/service/http.hpp"
#include "palace/service/pipeline.hpp"
#include "palace/service/store.hpp"
#include "palace/service/synth.hpp"

using namespace palace;
using namespace palace::service;
using nlohmann::json;

namespace {

struct CliResult {
  int code = 0;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "palace");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// One small pipeline shared by the CLI and API tests.
class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fresh_dir("palace_service_pipeline");
    const json cfg = {{"paths", {{"corpus", (dir_ / "synth/logs.jsonl").string()}, {"store", (dir_ / "store").string()}}},
                      {"tokenizer", "whitespace"},
                      {"evaluation", {{"bootstrap_resamples", 200}}}};
    std::ofstream(dir_ / "cfg.json") << cfg.dump(2);
    config_ = (dir_ / "cfg.json").string();
    const auto run = [](std::vector<std::string> a) {
      a.insert(a.begin(), {"--config", config_});
      const auto r = cli(a);
      EXPECT_EQ(r.code, 0) << a[2] << ": " << r.err;
      return r;
    };
    auto s = cli({"synth", "--out", (dir_ / "synth").string(), "--conversations", "40", "--queries", "12"});
    ASSERT_EQ(s.code, 0) << s.err;
    manifest_ = json::parse(s.out);
    ingest_ = json::parse(run({"ingest"}).out);
    run({"distill"});
    run({"index"});
    sweep_ = json::parse(run({"sweep", "--space", "evaluated", "--queries", (dir_ / "synth/queries.jsonl").string()}).out);
    run({"grade"});
    run({"consensus"});
    run({"report"});
  }

  static PipelineConfig config() { return load_config(config_); }

  static inline std::filesystem::path dir_;
  static inline std::string config_;
  static inline json manifest_, ingest_, sweep_;
};

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const PipelineConfig c;
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(to_json(c)["seeds"]["bootstrap"], 20240607u);
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(config_from_json(json{{"serach", json::object()}}), Error);
  EXPECT_THROW(config_from_json(json{{"search", {{"kk", 3}}}}), Error);
  try {
    config_from_json(json{{"search", {{"kk", 3}}}});
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("search.kk"), std::string::npos);
  }
}

TEST(Config, ProviderSpecsValidated) {
  PipelineConfig c;
  c.providers.graders = {"mock:mock-a", "smoke-signals"};
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.providers.distiller = "command:./distill.sh";
  c.providers.escalator = "";
  EXPECT_NO_THROW(c.validate());
  c.tokenizer = "gpt2";
  EXPECT_THROW(c.validate(), Error);
}

TEST(Config, WrongTypeRejected) { EXPECT_THROW(config_from_json(json{{"search", {{"k", "seven"}}}}), Error); }

TEST(Synth, DeterministicForSeed) {
  SynthConfig sc;
  sc.conversations = 30;
  sc.queries = 10;
  const auto a = generate_synth(sc), b = generate_synth(sc);
  ASSERT_EQ(a.messages.size(), b.messages.size());
  for (std::size_t i = 0; i < a.messages.size(); ++i) EXPECT_EQ(a.messages[i].text, b.messages[i].text);
  EXPECT_EQ(a.manifest, b.manifest);
  sc.seed = 2;
  EXPECT_NE(generate_synth(sc).messages.front().text, a.messages.front().text);
}

TEST(Synth, PlantedTermsAreUniqueAndPresent) {
  const auto s = generate_synth();
  EXPECT_EQ(s.manifest["expected_exchanges"], 1000);
  EXPECT_EQ(s.queries.size(), 50u);
  std::set<std::string> terms;
  for (const auto& x : s.exchanges) EXPECT_TRUE(terms.insert(x.term).second) << x.term;
  std::map<std::string, std::string> text_of;
  for (const auto& x : s.exchanges) text_of[x.ref];
  for (const auto& q : s.queries) {
    ASSERT_FALSE(q.targets.empty()) << q.query_id;
    for (const auto& t : q.targets) EXPECT_TRUE(text_of.count(t)) << t;
  }
}

TEST(Synth, EverySubstantiveMessageInExactlyOneExchange) {
  const auto s = generate_synth();
  std::map<std::string, std::vector<corpus::Message>> convs;
  for (const auto& m : s.messages) convs[m.conversation_id].push_back(m);
  std::size_t substantive = 0, covered = 0, exchanges = 0;
  for (const auto& [cid, msgs] : convs) {
    std::map<int, int> hits;
    const auto ex = corpus::filter_and_split(corpus::segment_conversation(msgs, {}), {});
    exchanges += ex.size();
    for (const auto& e : ex) {
      for (const auto& m : e.messages) ++hits[m.ply_index];
    }
    for (const auto& m : msgs) {
      if (m.is_tool_only) continue;
      ++substantive;
      EXPECT_EQ(hits[m.ply_index], 1) << cid << " ply " << m.ply_index;
      covered += hits[m.ply_index] == 1;
    }
  }
  EXPECT_EQ(substantive, s.manifest["substantive_messages"].get<std::size_t>());
  EXPECT_EQ(covered, substantive);
  EXPECT_EQ(exchanges, s.manifest["expected_exchanges"].get<std::size_t>());
}

TEST(Store, SecondLockFails) {
  const auto dir = fresh_dir("palace_lock_test");
  StoreLock first(dir / ".lock");
  EXPECT_THROW(StoreLock(dir / ".lock"), Error);
}

TEST(Store, RunFileNamesAreFlat) {
  PipelineConfig c;
  c.paths.store = "/tmp/x";
  EXPECT_EQ(StorePaths(c).run_file("full_text/exact/passthrough").filename(), "full_text__exact__passthrough.run");
}

TEST(Cli, NoArgsIsUsageError) {
  const auto r = cli({});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_NE(r.err.find("\"error\":\"usage\""), std::string::npos);
}

TEST(Cli, UnknownSubcommandIsUsageError) { EXPECT_EQ(cli({"frobnicate"}).code, 2); }

TEST(Cli, MalformedConfigIsUsageError) {
  const auto dir = fresh_dir("palace_cli_badcfg");
  std::ofstream(dir / "bad.json") << R"({"search": {"k": 7, "bogus": 1}})";
  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_EQ(cli({"--config", (dir / "bad.json").string(), "index"}).code, 2);
  EXPECT_EQ(cli({"--config", (dir / "broken.json").string(), "index"}).code, 2);
}

TEST(Cli, MissingStoreIsMachineReadableFailure) {
  const auto dir = fresh_dir("palace_cli_empty");
  std::ofstream(dir / "cfg.json") << json({{"paths", {{"store", (dir / "store").string()}}}}).dump();
  const auto r = cli({"--config", (dir / "cfg.json").string(), "distill"});
  EXPECT_EQ(r.code, 1);
  const auto line = json::parse(r.err);
  EXPECT_TRUE(line.contains("error"));
  EXPECT_TRUE(line.contains("message"));
}

TEST_F(Pipeline, IngestMatchesSynthManifest) {
  EXPECT_EQ(ingest_["exchanges"], manifest_["expected_exchanges"]);
  EXPECT_EQ(ingest_["messages"], manifest_["messages"]);
  EXPECT_EQ(ingest_["dropped_short"], 0);
}

TEST_F(Pipeline, SweepWritesOneRunFilePerEvaluatedConfig) {
  EXPECT_EQ(sweep_["configs"], 118);
  const StorePaths paths(config());
  const auto ids = run_config_ids(paths);
  ASSERT_EQ(ids.size(), 118u);
  for (const auto& id : ids) EXPECT_TRUE(std::filesystem::exists(paths.run_file(id))) << id;
}

TEST_F(Pipeline, GradingIsAppendOnly) {
  const auto before = read_grades(StorePaths(config()).grades()).size();
  const auto r = cli({"--config", config_, "grade"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["new_records"], 0);
  EXPECT_EQ(read_grades(StorePaths(config()).grades()).size(), before);
}

TEST_F(Pipeline, ReportHasEveryBlock) {
  const auto report = json::parse(jsonl::read_text(config().report_dir() / "report.json"));
  EXPECT_EQ(report["metrics"].size(), 118u);
  EXPECT_EQ(report["comparisons"].size(), 40u);
  EXPECT_DOUBLE_EQ(report["bonferroni_alpha"].get<double>(), 0.00125);
  EXPECT_DOUBLE_EQ(report["vocab_survival_identity_control"]["survival_rate"].get<double>(), 1.0);
  EXPECT_TRUE(report["constants"].contains("seeds"));
  EXPECT_EQ(report["planted_targets"].size(), 118u);
  for (const auto* key : {"coverage", "compression", "agreement", "consensus", "data_quality"}) {
    EXPECT_TRUE(report.contains(key)) << key;
  }
  EXPECT_TRUE(std::filesystem::exists(config().report_dir() / "report.md"));
}

TEST_F(Pipeline, CliSearchEchoesConfig) {
  const auto r = cli({"--config", config_, "search", "how did we fix problems", "--with", "distill_core/bm25_okapi/passthrough"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto body = json::parse(r.out);
  EXPECT_EQ(body["config_id"], "distill_core/bm25_okapi/passthrough");
  EXPECT_TRUE(body["rerank_lambda"].is_null());
  const auto reranked = cli({"--config", config_, "search", "how did we fix problems", "--rerank"});
  ASSERT_EQ(reranked.code, 0) << reranked.err;
  EXPECT_DOUBLE_EQ(json::parse(reranked.out)["rerank_lambda"].get<double>(), 0.7);
  EXPECT_EQ(cli({"--config", config_, "search", "x", "--with", "nope/none/none"}).code, 2);
}

TEST_F(Pipeline, ApiConfigsListsEvaluatedSpace) {
  const auto idx = load_indexes(config());
  const RecallApi api(idx);
  const auto r = api.configs();
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["configs"].size(), 118u);
}

TEST_F(Pipeline, ApiSelfRetrievalReturnsVerbatim) {
  const auto idx = load_indexes(config());
  const RecallApi api(idx);
  const auto& ex = idx.exchanges()[3];
  const auto r = api.search(ex.text(), "full_text/exact/passthrough", "5");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["config_id"], "full_text/exact/passthrough");
  ASSERT_FALSE(r.body["results"].empty());
  const auto& top = r.body["results"][0];
  EXPECT_EQ(top["exchange_ref"], ex.ref());
  EXPECT_EQ(top["rank"], 1);
  EXPECT_EQ(top["snippet"], text::truncate_chars(ex.text(), 1200));
  EXPECT_EQ(top["verbatim_snippet"], top["snippet"]);
}

TEST_F(Pipeline, ApiSnippetsAreNeverDistilled) {
  const auto idx = load_indexes(config());
  const RecallApi api(idx);
  for (const auto& c : search::enumerate_configs(search::ConfigSpace::evaluated)) {
    const auto r = api.search("how did we fix problems in atlas", c.id(), "7");
    ASSERT_EQ(r.status, 200) << c.id();
    for (const auto& e : r.body["results"]) {
      const auto id = idx.exchanges().find(e["exchange_ref"].get<std::string>());
      ASSERT_TRUE(id);
      EXPECT_EQ(e["snippet"], text::truncate_chars(idx.exchanges()[*id].text(), 1200));
      EXPECT_TRUE(e["routing"].contains("distilled_core"));
      EXPECT_FALSE(e.contains("distill_text"));
    }
  }
}

TEST_F(Pipeline, ApiExchangeIsByteIdenticalToCorpusStore) {
  const auto idx = load_indexes(config());
  const RecallApi api(idx);
  std::map<std::pair<std::string, int>, std::string> stored;
  for (const auto& row : jsonl::read(StorePaths(config()).corpus())) {
    stored[{row["conversation_id"], row["ply_index"]}] = row["text"];
  }
  for (std::size_t i = 0; i < idx.exchanges().size(); i += 7) {
    const auto& ex = idx.exchanges()[i];
    const auto r = api.exchange(ex.conversation_id, std::to_string(ex.ply_start), std::to_string(ex.ply_end));
    ASSERT_EQ(r.status, 200);
    ASSERT_EQ(r.body["messages"].size(), static_cast<std::size_t>(ex.ply_end - ex.ply_start + 1));
    for (const auto& m : r.body["messages"]) {
      EXPECT_EQ(m["text"].get<std::string>(), stored.at({m["conversation_id"], m["ply_index"]}));
    }
  }
}

TEST_F(Pipeline, ApiErrors) {
  const auto idx = load_indexes(config());
  const RecallApi api(idx);
  const auto unknown = api.search("q", "full_text/nothing/none", "");
  EXPECT_EQ(unknown.status, 404);
  EXPECT_EQ(unknown.body["configs"].size(), 118u);
  EXPECT_EQ(api.exchange("conv-9999", "0", "1").status, 404);
  EXPECT_EQ(api.exchange("conv-0000", "zero", "1").status, 404);
  EXPECT_EQ(api.search("q", "full_text/exact/passthrough", "0").status, 400);
  EXPECT_EQ(api.search("q", "full_text/exact/passthrough", "abc").status, 400);
  EXPECT_EQ(api.search("", "full_text/exact/passthrough", "").status, 400);
  EXPECT_EQ(api.search("q", "full_text/exact/passthrough", "", "1.5").status, 400);
}

TEST_F(Pipeline, ApiRoomsCountObjects) {
  const auto idx = load_indexes(config());
  const RecallApi api(idx);
  const auto r = api.rooms();
  std::size_t assignments = 0;
  for (const auto& o : idx.objects()) assignments += o.room_assignments.size();
  std::size_t counted = 0;
  std::set<std::tuple<std::string, std::string, std::string>> keys;
  for (const auto& room : r.body["rooms"]) {
    counted += room["object_count"].get<std::size_t>();
    EXPECT_TRUE(keys.insert({room["room_type"].get<std::string>(), room["room_key"].get<std::string>(),
                             room["project_id"].get<std::string>()}).second);
  }
  EXPECT_EQ(counted, assignments);
}

TEST_F(Pipeline, ApiIsStatelessAcrossReloads) {
  const auto a = load_indexes(config());
  const auto b = load_indexes(config());
  const RecallApi x(a), y(b);
  for (const auto* c : {"full_text/hnsw/passthrough", "distill_all/bm25_fts/rrf"}) {
    EXPECT_EQ(x.search("atlas retry timeout", c, "7").body, y.search("atlas retry timeout", c, "7").body);
  }
}

TEST_F(Pipeline, HttpServerRoundTrip) {
  const auto idx = load_indexes(config());
  const RecallApi api(idx);
  httplib::Server server;
  mount(server, api);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  const auto configs = client.Get("/configs");
  ASSERT_TRUE(configs);
  EXPECT_EQ(configs->status, 200);
  EXPECT_EQ(json::parse(configs->body)["count"], 118);
  const auto& ex = idx.exchanges()[0];
  const auto drill = client.Get("/exchange/" + ex.conversation_id + "/" + std::to_string(ex.ply_start) + "/" +
                                std::to_string(ex.ply_end));
  ASSERT_TRUE(drill);
  EXPECT_EQ(drill->status, 200);
  EXPECT_NE(drill->get_header_value("Content-Type").find("application/json"), std::string::npos);
  const auto missing = client.Get("/search?q=x&config=bogus");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  const auto nowhere = client.Get("/nowhere");
  ASSERT_TRUE(nowhere);
  EXPECT_EQ(nowhere->status, 404);
  server.stop();
  t.join();
}
