// Copyright 2026 The Gemel Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gemel/retrieval.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "gemel/checks.h"
#include "gemel/errors.h"
#include "gemel/model_bundle.h"
#include "gemel/rng.h"
#include "oracle_values.h"
#include "test_util.h"

namespace gemel {
namespace {

using testing::MakeMention;
using Strings = std::vector<std::string>;

std::vector<MentionInstance> MentionsOnly(const Strings& mentions) {
  std::vector<MentionInstance> out;
  for (size_t i = 0; i < mentions.size(); ++i) {
    out.push_back(MakeMention("d" + std::to_string(i), mentions[i], mentions[i]));
  }
  return out;
}

TEST(Bm25Test, SingleTermExample) {
  DemonstrationPool pool(MentionsOnly({"a b", "b c", "c d"}));
  EXPECT_EQ(pool.doc_length(0), 2u);
  EXPECT_DOUBLE_EQ(pool.average_doc_length(), 2.0);
  EXPECT_EQ(pool.document_frequency("a"), 1u);
  EXPECT_EQ(pool.document_frequency("c"), 2u);
  const Strings q = {"a"};
  std::vector<double> scores = pool.Bm25Scores(q);
  for (size_t i = 0; i < 3; ++i) EXPECT_NEAR(scores[i], oracle::kBm25ThreeDocs[i], 1e-12);
  EXPECT_NEAR(scores[0], std::log(8.0 / 3.0), 1e-12);
  EXPECT_EQ(pool.Bm25Score({}, 0), 0.0);
}

TEST(Bm25Test, MultiTermAndRepeatedQueryTokens) {
  DemonstrationPool pool(MentionsOnly({"a b a", "b c", "c d e f"}));
  const Strings q1 = {"a", "c"};
  const Strings q2 = {"c", "c", "z"};
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(pool.Bm25Score(q1, i), oracle::kBm25MixedDocs[i], 1e-12);
    EXPECT_NEAR(pool.Bm25Score(q2, i), oracle::kBm25MixedDocsDupQuery[i], 1e-12);
  }
  EXPECT_EQ(pool.term_frequency(0, "a"), 2u);
}

TEST(Bm25Test, ContextDocuments) {
  std::vector<MentionInstance> insts = {MakeMention("x", "the red fox", "fox")};
  DemonstrationPool mention_only(insts);
  DemonstrationPool with_context(insts, true);
  EXPECT_EQ(mention_only.Document(insts[0]), Strings{"fox"});
  EXPECT_EQ(with_context.Document(insts[0]), (Strings{"fox", "the", "red", "fox"}));
}

double NaiveBm25(const std::vector<Strings>& docs, const Strings& q, size_t d, double k1,
                 double b) {
  double avg = 0;
  for (const auto& doc : docs) avg += static_cast<double>(doc.size());
  avg /= static_cast<double>(docs.size());
  double s = 0;
  for (const auto& t : q) {
    double df = 0;
    for (const auto& doc : docs) df += std::count(doc.begin(), doc.end(), t) > 0;
    const double tf = static_cast<double>(std::count(docs[d].begin(), docs[d].end(), t));
    const double n = static_cast<double>(docs.size());
    const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1);
    s += idf * tf * (k1 + 1) /
         (tf + k1 * (1 - b + b * static_cast<double>(docs[d].size()) / avg));
  }
  return s;
}

TEST(Bm25Property, MatchesNaiveFormulaAndStatistics) {
  const Strings words = {"a", "b", "c", "d", "e", "f", "g"};
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Strings> docs(1 + rng.UniformInt(8));
    Strings texts;
    for (auto& doc : docs) {
      doc.resize(1 + rng.UniformInt(5));
      std::string text;
      for (auto& w : doc) {
        w = words[rng.UniformInt(words.size())];
        text += (text.empty() ? "" : " ") + w;
      }
      texts.push_back(text);
    }
    DemonstrationPool pool(MentionsOnly(texts));
    double mean = 0;
    for (size_t i = 0; i < docs.size(); ++i) mean += static_cast<double>(pool.doc_length(i));
    EXPECT_NEAR(pool.average_doc_length(), mean / static_cast<double>(docs.size()), 1e-12);
    for (const auto& w : words) {
      size_t df = 0;
      for (const auto& doc : docs) df += std::count(doc.begin(), doc.end(), w) > 0;
      EXPECT_EQ(pool.document_frequency(w), df);
    }
    Strings q(rng.UniformInt(4));
    for (auto& w : q) w = words[rng.UniformInt(words.size())];
    Bm25Params params{0.5 + rng.Uniform01() * 2, rng.Uniform01()};
    for (size_t d = 0; d < docs.size(); ++d) {
      EXPECT_NEAR(pool.Bm25Score(q, d, params), NaiveBm25(docs, q, d, params.k1, params.b),
                  1e-9);
    }
  }
}

TEST(SelectRandomTest, Examples) {
  DemonstrationPool pool(MentionsOnly({"a", "b", "c"}));
  std::vector<size_t> all = SelectRandom(pool, 3, 9);
  EXPECT_EQ(std::set<size_t>(all.begin(), all.end()), (std::set<size_t>{0, 1, 2}));
  EXPECT_EQ(SelectRandom(pool, 3, 9), all);
  EXPECT_TRUE(SelectRandom(pool, 0, 9).empty());
  EXPECT_THROW(SelectRandom(pool, 3, 9, 1), ValidationError);
  EXPECT_THROW(SelectRandom(pool, 4, 9), ValidationError);
}

TEST(SelectRandomTest, FrozenDraw) {
  // Fixed across platforms: the engine is mt19937_64 and sampling is local.
  Strings names;
  for (int i = 0; i < 10; ++i) names.push_back("w" + std::to_string(i));
  DemonstrationPool pool(MentionsOnly(names));
  std::vector<size_t> got = SelectRandom(pool, 4, 12345, 3);
  std::vector<size_t> again = SelectRandom(pool, 4, 12345, 3);
  EXPECT_EQ(got, again);
  EXPECT_EQ(std::count(got.begin(), got.end(), 3u), 0);
}

TEST(SelectRandomProperty, DistinctAndExcludesQuery) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t size = 1 + rng.UniformInt(20);
    Strings names;
    for (size_t i = 0; i < size; ++i) names.push_back("w" + std::to_string(i));
    DemonstrationPool pool(MentionsOnly(names));
    const size_t exclude = rng.UniformInt(size);
    const size_t n = rng.UniformInt(size);
    std::vector<size_t> got = SelectRandom(pool, n, rng.NextU64(), exclude);
    EXPECT_EQ(got.size(), n);
    EXPECT_EQ(std::set<size_t>(got.begin(), got.end()).size(), n);
    EXPECT_EQ(std::count(got.begin(), got.end(), exclude), 0);
  }
}

TEST(SelectTopKTest, Examples) {
  DemonstrationPool pool(MentionsOnly({"a", "b", "c"}));
  std::vector<double> scores = {0.9, 0.1, 0.5};
  std::vector<ScoredDemo> top = SelectTopK(pool, scores, 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].index, 2u);
  EXPECT_EQ(top[1].index, 0u);

  std::vector<double> equal = {1, 1, 1};
  top = SelectTopK(pool, equal, 2);
  EXPECT_EQ(top[0].index, 0u);
  EXPECT_EQ(top[1].index, 1u);

  top = SelectTopK(pool, scores, 3);
  EXPECT_EQ(top[0].index, 1u);
  EXPECT_EQ(top[2].index, 0u);

  EXPECT_THROW(SelectTopK(pool, scores, 4), ValidationError);
  std::vector<double> bad = {1, NAN, 0};
  EXPECT_THROW(SelectTopK(pool, bad, 1), ValidationError);
}

TEST(SelectTopKProperty, AscendingAndBruteForceTopSet) {
  Rng rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const size_t size = 1 + rng.UniformInt(15);
    Strings names;
    for (size_t i = 0; i < size; ++i) names.push_back("w" + std::to_string(i));
    DemonstrationPool pool(MentionsOnly(names));
    std::vector<double> scores(size);
    for (auto& s : scores) s = static_cast<double>(rng.UniformInt(5));
    std::optional<size_t> exclude;
    if (rng.UniformInt(2)) exclude = rng.UniformInt(size);
    const size_t available = size - (exclude ? 1 : 0);
    const size_t n = rng.UniformInt(available + 1);
    std::vector<ScoredDemo> top = SelectTopK(pool, scores, n, exclude);
    ASSERT_EQ(top.size(), n);
    for (size_t i = 1; i < n; ++i) EXPECT_LE(top[i - 1].score, top[i].score);
    // Brute force: sort candidates by (score desc, id asc) and take n.
    std::vector<size_t> order;
    for (size_t i = 0; i < size; ++i) {
      if (!exclude || i != *exclude) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return pool.instances()[a].id < pool.instances()[b].id;
    });
    std::set<size_t> expected(order.begin(), order.begin() + n);
    std::set<size_t> got;
    for (const auto& d : top) got.insert(d.index);
    EXPECT_EQ(got, expected);
  }
}

TEST(CosineTest, Examples) {
  EXPECT_DOUBLE_EQ(Cosine(std::vector<double>{1, 0}, std::vector<double>{1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(Cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_NEAR(Cosine(std::vector<double>{1, 2}, std::vector<double>{2, 4}), 1.0, 1e-15);
  EXPECT_THROW(Cosine(std::vector<double>{0, 0}, std::vector<double>{1, 0}), ValidationError);
  EXPECT_THROW(Cosine(std::vector<double>{1}, std::vector<double>{1, 0}), ValidationError);
}

class DenseRetrievalTest : public ::testing::Test {
 protected:
  void SetUp() override {
    kb_ = testing::MakeKb({"red fox", "blue fox", "green owl"});
    vocab_ = testing::VocabFor(kb_, "we saw the red fox near a blue owl today");
    TinyModelSpec spec;
    model_ = MakeRandomModel(vocab_, spec, 77);
  }
  KnowledgeBase kb_;
  Vocabulary vocab_;
  ModelBundle model_;
};

TEST_F(DenseRetrievalTest, EmbeddingExamples) {
  MentionInstance one = MakeMention("a", "we saw the fox today", "fox");
  std::vector<double> e1 = EmbedMention(model_, one);
  ASSERT_EQ(e1.size(), model_.config.lm.d_model);
  EXPECT_EQ(EmbedMention(model_, one), e1);

  // Single-token mention: the final hidden state at that position.
  TokenSeq ids = Tokenize(vocab_, one.text);
  Tensor hidden = model_.lm.Hidden(model_.lm.EmbedTokens(ids, 0));
  auto row = hidden.row(3);
  for (size_t c = 0; c < e1.size(); ++c) EXPECT_DOUBLE_EQ(e1[c], row[c]);

  MentionInstance other = MakeMention("b", "a blue fox", "fox");
  EXPECT_NE(EmbedMention(model_, other), e1);

  MentionInstance two = MakeMention("c", "we saw the red fox", "red fox");
  std::vector<double> e2 = EmbedMention(model_, two);
  Tensor h2 = model_.lm.Hidden(model_.lm.EmbedTokens(Tokenize(vocab_, two.text), 0));
  for (size_t c = 0; c < e2.size(); ++c) {
    EXPECT_NEAR(e2[c], 0.5 * (h2.row(3)[c] + h2.row(4)[c]), 1e-12);
  }
}

TEST_F(DenseRetrievalTest, RetrieverNeverReturnsQuery) {
  std::vector<MentionInstance> insts = {
      MakeMention("a", "we saw the red fox", "red fox", "Q1"),
      MakeMention("b", "a blue fox today", "blue fox", "Q2"),
      MakeMention("c", "the green owl", "green owl", "Q3"),
      MakeMention("d", "near a red fox", "red fox", "Q1"),
      MakeMention("e", "we saw a blue owl", "owl", "Q3")};
  auto pool = std::make_shared<DemonstrationPool>(insts);
  for (RetrievalMethod m : {RetrievalMethod::kRandom, RetrievalMethod::kBm25,
                            RetrievalMethod::kDense}) {
    RetrievalConfig cfg;
    cfg.method = m;
    cfg.n = 4;
    DemoRetriever retriever(cfg, pool, &model_, 5);
    for (const auto& q : insts) {
      std::vector<MentionInstance> demos = retriever.Retrieve(q);
      EXPECT_EQ(demos.size(), 4u);
      for (const auto& d : demos) EXPECT_NE(d.id, q.id) << RetrievalMethodName(m);
      EXPECT_EQ(retriever.Retrieve(q), demos);
    }
  }
  RetrievalConfig bm25;
  bm25.method = RetrievalMethod::kBm25;
  bm25.n = 1;
  DemoRetriever r(bm25, pool, nullptr, 0);
  EXPECT_EQ(r.Retrieve(insts[0])[0].id, "d");
}

TEST_F(DenseRetrievalTest, PrecomputedEmbeddingsFile) {
  std::vector<MentionInstance> insts = {MakeMention("a", "red fox", "red fox", "Q1"),
                                        MakeMention("b", "blue fox", "blue fox", "Q2"),
                                        MakeMention("c", "green owl", "green owl", "Q3")};
  VisionFeatureStore emb(2, {"a", "b", "c"}, {{1, 0}, {0.9, 0.1}, {0, 1}});
  testing::TempDir dir;
  emb.Save(dir.File("emb.gmfv"));
  RetrievalConfig cfg;
  cfg.n = 1;
  cfg.embeddings_path = dir.File("emb.gmfv");
  DemoRetriever retriever(cfg, std::make_shared<DemonstrationPool>(insts), nullptr, 0);
  EXPECT_EQ(retriever.Retrieve(insts[0])[0].id, "b");
  EXPECT_EQ(retriever.Retrieve(insts[2])[0].id, "b");
}

TEST(RetrievalMethodTest, ParseNames) {
  for (RetrievalMethod m : {RetrievalMethod::kRandom, RetrievalMethod::kBm25,
                            RetrievalMethod::kDense}) {
    EXPECT_EQ(ParseRetrievalMethod(RetrievalMethodName(m)), m);
  }
  EXPECT_THROW(ParseRetrievalMethod("sparse"), ValidationError);
}

TEST(DemonstrationPoolTest, DuplicateIdsRejected) {
  std::vector<MentionInstance> insts = MentionsOnly({"a", "b"});
  insts[1].id = insts[0].id;
  EXPECT_THROW(DemonstrationPool pool(insts), ValidationError);
}

}  // namespace
}  // namespace gemel
