#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "palace/index/analyzer.hpp"
#include "palace/index/bm25.hpp"
#include "palace/index/embedding.hpp"
#include "palace/index/porter.hpp"
#include "palace/index/vector_index.hpp"
#include "support/oracles.hpp"

using namespace palace;
using namespace palace::index;

using oracle::random_store;
using oracle::random_unit;

TEST(Analyzer, OkapiLowercasesAndSplits) {
  EXPECT_EQ(tokenize_for_index("Connection Pools!", Analyzer::okapi),
            (std::vector<std::string>{"connection", "pools"}));
  EXPECT_EQ(tokenize_for_index("src/db_pool.py:42", Analyzer::okapi),
            (std::vector<std::string>{"src", "db", "pool", "py", "42"}));
}

TEST(Analyzer, FtsStemsAndDropsStopwords) {
  EXPECT_EQ(tokenize_for_index("Connection Pools!", Analyzer::fts),
            (std::vector<std::string>{"connect", "pool"}));
  EXPECT_TRUE(tokenize_for_index("the of and", Analyzer::fts).empty());
}

// Reference stems from NLTK's PorterStemmer(mode=ORIGINAL_ALGORITHM).
TEST(Porter, MatchesReferenceVectors) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"caresses", "caress"}, {"ponies", "poni"}, {"ties", "ti"}, {"caress", "caress"}, {"cats", "cat"}, {"feed", "feed"}, {"agreed", "agre"}, {"plastered", "plaster"}, {"bled", "bled"}, {"motoring", "motor"}, {"sing", "sing"}, {"conflated", "conflat"}, {"troubled", "troubl"}, {"sized", "size"}, {"hopping", "hop"}, {"tanned", "tan"}, {"falling", "fall"}, {"hissing", "hiss"}, {"fizzed", "fizz"}, {"failing", "fail"}, {"filing", "file"}, {"happy", "happi"}, {"sky", "sky"}, {"relational", "relat"}, {"conditional", "condit"}, {"rational", "ration"}, {"valenci", "valenc"}, {"hesitanci", "hesit"}, {"digitizer", "digit"}, {"conformabli", "conform"}, {"radicalli", "radic"}, {"differentli", "differ"}, {"vileli", "vile"}, {"analogousli", "analog"}, {"vietnamization", "vietnam"}, {"predication", "predic"}, {"operator", "oper"}, {"feudalism", "feudal"}, {"decisiveness", "decis"}, {"hopefulness", "hope"}, {"callousness", "callous"}, {"formaliti", "formal"}, {"sensitiviti", "sensit"}, {"sensibiliti", "sensibl"}, {"triplicate", "triplic"}, {"formative", "form"}, {"formalize", "formal"}, {"electriciti", "electr"}, {"electrical", "electr"}, {"hopeful", "hope"}, {"goodness", "good"}, {"revival", "reviv"}, {"allowance", "allow"}, {"inference", "infer"}, {"airliner", "airlin"}, {"gyroscopic", "gyroscop"}, {"adjustable", "adjust"}, {"defensible", "defens"}, {"irritant", "irrit"}, {"replacement", "replac"}, {"adjustment", "adjust"}, {"dependent", "depend"}, {"adoption", "adopt"}, {"homologou", "homolog"}, {"communism", "commun"}, {"activate", "activ"}, {"angulariti", "angular"}, {"homologous", "homolog"}, {"effective", "effect"}, {"bowdlerize", "bowdler"}, {"probate", "probat"}, {"rate", "rate"}, {"cease", "ceas"}, {"controll", "control"}, {"roll", "roll"}, {"generalization", "gener"}, {"oscillators", "oscil"}, {"connection", "connect"}, {"connections", "connect"}, {"connective", "connect"}, {"connected", "connect"}, {"connecting", "connect"}, {"pools", "pool"}, {"pooling", "pool"}, {"timeout", "timeout"}, {"timeouts", "timeout"}, {"retried", "retri"}, {"retrying", "retri"}, {"configuration", "configur"}, {"indexing", "index"}, {"embeddings", "embed"}, {"tokenizer", "token"}, {"distillation", "distil"}, {"agreement", "agreement"},
  };
  const PorterStemmer stemmer;
  for (const auto& [word, stem] : cases) EXPECT_EQ(stemmer.stem(word), stem) << word;
}

TEST(Idf, FormulaValues) {
  EXPECT_NEAR(idf(10, 10), 0.04652001563489291, 1e-15);
  EXPECT_DOUBLE_EQ(idf(2, 1), std::log(2.0));
  std::vector<std::vector<std::string>> docs{{"x", "y"}, {"x"}, {"y", "z"}};
  const auto table = idf_table(docs);
  EXPECT_EQ(table.at("x"), table.at("y"));
  EXPECT_GT(table.at("z"), table.at("x"));
}

TEST(Bm25, NoOverlapScoresZero) {
  const std::vector<std::string> docs{"alpha beta", "gamma"};
  const Bm25Index index(docs, Analyzer::okapi);
  EXPECT_EQ(index.score(std::vector<std::string>{"delta"}, 0), 0.0);
  EXPECT_THROW(index.score(std::vector<std::string>{"alpha"}, 5), Error);
}

TEST(Bm25, TwoDocWorkedValue) {
  const std::vector<std::string> docs{"a b", "c"};
  const Bm25Index index(docs, Analyzer::okapi);
  EXPECT_NEAR(index.score(std::vector<std::string>{"a"}, 0), 0.6027366787477785, 1e-12);
}

TEST(Bm25, TermFrequencySaturates) {
  double prev = 0.0;
  double prev_gain = 1e9;
  for (int tf = 1; tf <= 8; ++tf) {
    std::string doc;
    for (int i = 0; i < tf; ++i) doc += "hit ";
    std::vector<std::string> docs{doc + std::string("pad pad pad pad pad pad pad pad"), "other words"};
    // keep document length fixed so only tf changes
    docs[0] = doc;
    for (int i = tf; i < 8; ++i) docs[0] += "pad ";
    const Bm25Index index(docs, Analyzer::okapi);
    const double s = index.score(std::vector<std::string>{"hit"}, 0);
    EXPECT_GT(s, prev);
    if (tf > 1) {
      EXPECT_LT(s - prev, prev_gain);
      prev_gain = s - prev;
    }
    prev = s;
  }
}

TEST(Bm25, OracleEquivalenceOnRandomMicroCorpora) {
  std::mt19937 rng(11);
  const std::vector<std::string> vocab{"t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7"};
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n_docs = 1 + rng() % 10;
    std::vector<std::vector<std::string>> docs(n_docs);
    for (auto& d : docs) {
      const std::size_t len = rng() % 9;
      for (std::size_t i = 0; i < len; ++i) d.push_back(vocab[rng() % vocab.size()]);
    }
    std::vector<std::string> query;
    for (std::size_t i = 0, n = 1 + rng() % 4; i < n; ++i) query.push_back(vocab[rng() % vocab.size()]);
    const Bm25Index index(std::span<const std::vector<std::string>>(docs), Analyzer::okapi);
    for (std::size_t d = 0; d < n_docs; ++d) {
      const double got = index.score(query, static_cast<std::uint32_t>(d));
      worst = std::max(worst, std::abs(got - oracle::bm25(docs, query, d, 1.5, 0.75)));
      EXPECT_GE(got, 0.0);
    }
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Bm25, SearchContract) {
  const std::vector<std::string> docs{"apple", "banana", "apple", "cherry", "kiwi", "apple"};
  const Bm25Index index(docs, Analyzer::okapi);
  EXPECT_TRUE(index.search("durian", 5).empty());
  const auto hits = index.search("apple", 10);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].doc, 0u);
  EXPECT_EQ(hits[1].doc, 2u);
  EXPECT_EQ(hits[2].doc, 5u);
  EXPECT_EQ(index.search("apple", 1).size(), 1u);
}

TEST(Bm25, EqualScoresBreakTiesByDocId) {
  std::vector<std::string> docs(6, "filler");
  docs[5] = "target";
  docs[2] = "target";
  const Bm25Index index(docs, Analyzer::okapi);
  const auto hits = index.search("target", 5);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].score, hits[1].score);
  EXPECT_EQ(hits[0].doc, 2u);
  EXPECT_EQ(hits[1].doc, 5u);
}

TEST(Bm25, InvariantsHold) {
  const std::vector<std::string> docs{"a b c", "b c", "c", ""};
  const Bm25Index index(docs, Analyzer::okapi);
  double sum = 0;
  for (const auto l : index.doc_lens()) sum += l;
  EXPECT_DOUBLE_EQ(index.avg_doc_len(), sum / 4.0);
  for (const auto* term : {"a", "b", "c"}) {
    for (const auto& p : index.postings(term)) EXPECT_LT(p.doc, index.doc_count());
  }
  EXPECT_THROW(Bm25Index(docs, Analyzer::okapi, {.k1 = 0.0, .b = 0.75}), Error);
  EXPECT_THROW(Bm25Index(docs, Analyzer::okapi, {.k1 = 1.5, .b = 1.5}), Error);
}

TEST(Embedding, FallbackIsDeterministicAndUnitNorm) {
  const HashingEmbedder emb(384);
  const auto a = embed("connection pool timeout", emb);
  const auto b = embed("connection pool timeout", emb);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NEAR(a.norm, 1.0, 1e-6);
  EXPECT_NEAR(dot(a.values, b.values), 1.0, 1e-6);
  std::mt19937 rng(3);
  for (int i = 0; i < 200; ++i) {
    std::string t;
    for (int j = 0, n = static_cast<int>(rng() % 40); j < n; ++j) t += "w" + std::to_string(rng() % 500) + " ";
    const auto v = embed(t, emb);
    double sq = 0;
    for (const float x : v.values) sq += static_cast<double>(x) * x;
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-6);
  }
}

TEST(Embedding, EmptyTextIsTheUniformConstant) {
  const HashingEmbedder emb(384);
  const auto v = embed("", emb);
  const float expected = static_cast<float>(1.0 / std::sqrt(384.0));
  for (const float x : v.values) EXPECT_NEAR(x, expected, 1e-7);
  EXPECT_EQ(embed("?!", emb).values, v.values);
}

TEST(Embedding, ProviderFailureNamesTheText) {
  const CommandEmbedder bad("exit 3", 4);
  try {
    embed("x", bad, "doc-17");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::provider);
    EXPECT_NE(std::string(e.what()).find("doc-17"), std::string::npos);
  }
  const CommandEmbedder good("echo '[3,0,4,0]'", 4);
  const auto v = embed("x", good);
  EXPECT_NEAR(v.values[0], 0.6f, 1e-7);
  EXPECT_NEAR(v.values[2], 0.8f, 1e-7);
}

TEST(ExactSearch, SelfMatchAndTruncation) {
  std::mt19937_64 rng(5);
  auto store = random_store(rng, 20, 16);
  const ExactIndex index(store);
  const auto q = std::vector<float>(store.row(7).begin(), store.row(7).end());
  const auto hits = index.search(q, 5);
  ASSERT_EQ(hits.size(), 5u);
  EXPECT_EQ(hits[0].doc, 7u);
  EXPECT_NEAR(hits[0].score, 1.0, 1e-6);
  EXPECT_EQ(index.search(q, 100).size(), 20u);
  EXPECT_THROW(index.search(std::vector<float>(3, 0.f), 1), Error);
}

TEST(ExactSearch, MatchesBruteForceOracle) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    auto store = random_store(rng, 50, 32);
    const ExactIndex index(store);
    const auto q = random_unit(rng, 32);
    const auto want = oracle::brute_force_top(store, q, 10);
    std::vector<std::uint32_t> got;
    for (const auto& h : index.search(q, 10)) got.push_back(h.doc);
    EXPECT_EQ(got, want);
  }
}

TEST(Hnsw, SingletonIndex) {
  VectorStore store(8, Layer::distilled);
  std::vector<float> v(8, 0.f);
  v[0] = 1.f;
  store.add(v, 0);
  const HnswIndex index(store, {});
  std::mt19937_64 rng(1);
  const auto hits = index.search(random_unit(rng, 8), 1);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].doc, 0u);
}

TEST(Hnsw, EfSearchBelowKIsConfigError) {
  std::mt19937_64 rng(2);
  const HnswIndex index(random_store(rng, 10, 8), {});
  try {
    index.search(random_unit(rng, 8), 20, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(Hnsw, StoredVectorRanksFirst) {
  std::mt19937_64 rng(4);
  const auto store = random_store(rng, 500, 64);
  const HnswIndex index(store, {.M = 16, .ef_construction = 200, .ef_search = 64, .seed = 42});
  for (int trial = 0; trial < 100; ++trial) {
    const auto id = static_cast<std::uint32_t>(rng() % 500);
    const std::vector<float> q(store.row(id).begin(), store.row(id).end());
    EXPECT_EQ(index.search(q, 1).front().doc, id);
  }
}

TEST(Hnsw, RecallAgainstExactOnSmallSet) {
  std::mt19937_64 rng(8);
  const auto store = random_store(rng, 800, 64);
  const HnswIndex hnsw(store, {});
  const ExactIndex exact(store);
  std::size_t found = 0;
  for (int q = 0; q < 50; ++q) {
    const auto query = random_unit(rng, 64);
    const auto truth = exact.search(query, 10);
    const auto got = hnsw.search(query, 10);
    std::set<std::uint32_t> t;
    for (const auto& h : truth) t.insert(h.doc);
    for (const auto& h : got) found += t.count(h.doc);
  }
  EXPECT_GE(static_cast<double>(found) / 500.0, 0.95);
}

TEST(Hnsw, DeterministicForFixedSeed) {
  std::mt19937_64 rng(6);
  const auto store = random_store(rng, 300, 32);
  const HnswIndex a(store, {});
  const HnswIndex b(store, {});
  for (int i = 0; i < 20; ++i) {
    const auto q = random_unit(rng, 32);
    EXPECT_EQ(a.search(q, 10), b.search(q, 10));
  }
}

TEST(Persistence, BitExactRoundTrip) {
  std::mt19937_64 rng(12);
  const auto store = random_store(rng, 37, 24);
  const HnswParams params{.M = 8, .ef_construction = 50, .ef_search = 40, .seed = 99};
  const auto bytes = serialize_vectors(store, VectorKind::hnsw, params);
  EXPECT_EQ(bytes.substr(0, 7), "PALVEC1");
  const auto loaded = deserialize_vectors(bytes);
  EXPECT_EQ(loaded.kind, VectorKind::hnsw);
  EXPECT_EQ(loaded.params.M, 8u);
  EXPECT_EQ(loaded.params.seed, 99u);
  EXPECT_EQ(loaded.store, store);
  EXPECT_EQ(serialize_vectors(loaded.store, loaded.kind, loaded.params), bytes);
  EXPECT_THROW(deserialize_vectors(bytes.substr(0, bytes.size() - 1)), Error);
  EXPECT_THROW(deserialize_vectors("NOTVEC"), Error);
}
