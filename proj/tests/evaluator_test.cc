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

#include "gemel/evaluator.h"

#include <gtest/gtest.h>
#include <omp.h>

#include <cstdlib>
#include <memory>

#include "gemel/checks.h"
#include "gemel/errors.h"
#include "gemel/rng.h"
#include "test_util.h"

namespace gemel {
namespace {

using Strings = std::vector<std::string>;

TEST(Top1AccuracyTest, Examples) {
  EXPECT_DOUBLE_EQ(Top1Accuracy(Strings{"a", "b", "c"}, Strings{"a", "b", "d"}), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(Top1Accuracy(Strings{"a", "b"}, Strings{"a", "b"}), 1.0);
  EXPECT_DOUBLE_EQ(Top1Accuracy(Strings{"a", "b"}, Strings{"c", "d"}), 0.0);
  EXPECT_THROW(Top1Accuracy(Strings{"a"}, Strings{"a", "b"}), ValidationError);
  EXPECT_THROW(Top1Accuracy(Strings{}, Strings{}), ValidationError);
}

InstanceResult Result(const std::string& id, const std::string& gold, const std::string& pred) {
  return {id, gold, pred, gold == pred, ""};
}

KnowledgeBase PopularityKb() {
  return KnowledgeBase(std::vector<EntityRecord>{{"A", "alpha", 100}, {"B", "beta", 0}});
}

TEST(BiasReportTest, CommonAndTailSplit) {
  // Percentile 75 over gold counts {0, 0, 100, 100} gives threshold 100.
  std::vector<InstanceResult> results = {Result("1", "A", "A"), Result("2", "A", "A"),
                                         Result("3", "B", "B"), Result("4", "B", "A")};
  EvalReport r = BiasReport(results, PopularityKb(), 75);
  EXPECT_EQ(r.threshold, 100);
  EXPECT_EQ(r.common.n, 2u);
  EXPECT_EQ(r.tail.n, 2u);
  EXPECT_DOUBLE_EQ(*r.common.accuracy(), 1.0);
  EXPECT_DOUBLE_EQ(*r.tail.accuracy(), 0.5);
  EXPECT_DOUBLE_EQ(r.overall_acc, 0.75);
  EXPECT_EQ(r.instances[3].bucket, "tail");
  EXPECT_EQ(r.instances[0].bucket, "common");
}

TEST(BiasReportTest, MedianOfTwoValuedCountsLeavesTailEmpty) {
  std::vector<InstanceResult> results = {Result("1", "A", "A"), Result("2", "A", "A"),
                                         Result("3", "B", "B"), Result("4", "B", "A")};
  EvalReport r = BiasReport(results, PopularityKb(), 50);
  EXPECT_EQ(r.threshold, 0);
  EXPECT_EQ(r.tail.n, 0u);
  EXPECT_FALSE(r.tail.accuracy().has_value());
  EXPECT_TRUE(r.ToJson()["per_bucket"]["tail"]["acc"].is_null());
}

TEST(BiasReportTest, Errors) {
  EXPECT_THROW(BiasReport({}, PopularityKb(), 5), ValidationError);
  EXPECT_THROW(BiasReport({Result("1", "Z", "A")}, PopularityKb(), 5), ValidationError);
}

TEST(BiasReportProperty, BucketIdentitiesHold) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EntityRecord> records;
    const size_t entities = 1 + rng.UniformInt(12);
    for (size_t e = 0; e < entities; ++e) {
      records.push_back({"E" + std::to_string(e), "name " + std::to_string(e),
                         static_cast<int64_t>(rng.UniformInt(50))});
    }
    KnowledgeBase kb(records);
    std::vector<InstanceResult> results;
    const size_t n = 1 + rng.UniformInt(40);
    for (size_t i = 0; i < n; ++i) {
      const std::string gold = "E" + std::to_string(rng.UniformInt(entities));
      const std::string pred = "E" + std::to_string(rng.UniformInt(entities));
      results.push_back(Result(std::to_string(i), gold, pred));
    }
    const double percentile = rng.Uniform(1, 99);
    EvalReport r = BiasReport(results, kb, percentile);
    EXPECT_EQ(r.common.n + r.tail.n, r.n);
    EXPECT_EQ(r.common.correct + r.tail.correct, r.correct);
    EXPECT_DOUBLE_EQ(r.overall_acc, static_cast<double>(r.correct) / static_cast<double>(n));
    for (const InstanceResult& inst : r.instances) {
      const int64_t count = kb.at(*kb.FindById(inst.gold)).count;
      EXPECT_EQ(inst.bucket == "tail", count < r.threshold);
    }
  }
}

TEST(PredictionsTest, RoundTripAndMatching) {
  std::vector<Prediction> preds(2);
  preds[0] = {"m1", "alpha", "A", -0.5, {{"alpha", -0.5}, {"beta", -2.25}}};
  preds[1] = {"m2", "beta", "B", -1.0, {}};
  const std::string text = SerializePredictions(preds);
  std::vector<Prediction> back = ParsePredictions(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(SerializePredictions(back), text);
  EXPECT_THROW(ParsePredictions("{\"id\": 1}\n"), ValidationError);

  std::vector<MentionInstance> gold = {testing::MakeMention("m1", "alpha here", "alpha", "A"),
                                       testing::MakeMention("m2", "beta here", "beta", "A")};
  std::vector<InstanceResult> matched = MatchPredictions(preds, gold);
  ASSERT_EQ(matched.size(), 2u);
  EXPECT_TRUE(matched[0].correct);
  EXPECT_FALSE(matched[1].correct);
  preds.pop_back();
  EXPECT_THROW(MatchPredictions(preds, gold), ValidationError);
}

TEST(ReportTest, DumpIsReproducibleAndTableHasNullTail) {
  std::vector<InstanceResult> results = {Result("1", "A", "A"), Result("2", "B", "A")};
  EvalReport r1 = BiasReport(results, PopularityKb(), 50);
  EvalReport r2 = BiasReport(results, PopularityKb(), 50);
  r1.variant = r2.variant = "full";
  EXPECT_EQ(r1.Dump(), r2.Dump());
  std::vector<EvalReport> reports = {r1};
  const std::string table = SummaryTable(reports);
  EXPECT_EQ(table,
            "variant\tn\toverall\tcommon\tn_common\ttail\tn_tail\n"
            "full\t2\t50.00\t50.00\t2\t-\t0\n");
}

TEST(VariantTest, NamesAndFlags) {
  for (Variant v : {Variant::kFull, Variant::kNoVisual, Variant::kNoIcl}) {
    EXPECT_EQ(ParseVariant(VariantName(v)), v);
  }
  EXPECT_THROW(ParseVariant("no_text"), ValidationError);
  PromptOptions base;
  EXPECT_FALSE(ApplyVariant(base, Variant::kNoVisual).use_visual);
  EXPECT_TRUE(ApplyVariant(base, Variant::kNoVisual).use_icl);
  EXPECT_FALSE(ApplyVariant(base, Variant::kNoIcl).use_icl);
  EXPECT_TRUE(ApplyVariant(base, Variant::kFull).use_visual);
}

class LinkingTest : public ::testing::Test {
 protected:
  LinkingTest() {
    kb_ = testing::MakeKb({"red fox", "blue fox", "green owl", "grey owl"});
    vocab_ = testing::VocabFor(kb_, "we saw a the animal in forest near river");
    TinyModelSpec spec;
    spec.prefix_len = 2;
    model_ = MakeRandomModel(vocab_, spec, 12);
    trie_ = EntityTrie::Build(kb_, vocab_);
    const Strings texts = {"we saw the fox", "the owl in forest", "a fox near river",
                           "the owl near river", "we saw a owl", "the fox in forest"};
    std::vector<MentionInstance> train;
    for (size_t i = 0; i < texts.size(); ++i) {
      const std::string mention = texts[i].find("fox") != std::string::npos ? "fox" : "owl";
      train.push_back(testing::MakeMention("t" + std::to_string(i), texts[i], mention,
                                           "Q" + std::to_string(1 + i % 4),
                                           "img" + std::to_string(i)));
    }
    pool_ = std::make_shared<DemonstrationPool>(train);
    for (size_t i = 0; i < 5; ++i) {
      queries_.push_back(testing::MakeMention("q" + std::to_string(i), texts[i], train[i].mention,
                                              "Q" + std::to_string(1 + (i + 1) % 4),
                                              "img_q" + std::to_string(i)));
    }
    queries_.push_back(testing::MakeMention("q5", "the animal near river", "animal", "Q4"));
    RetrievalConfig rc;
    rc.method = RetrievalMethod::kBm25;
    rc.n = 2;
    retriever_ = std::make_unique<DemoRetriever>(rc, pool_, &model_, 9);
    ctx_.model = &model_;
    ctx_.kb = &kb_;
    ctx_.trie = &trie_;
    ctx_.retriever = retriever_.get();
    ctx_.prompt.prefix_len = 2;
    ctx_.decode.beam = 3;
  }

  KnowledgeBase kb_;
  Vocabulary vocab_;
  ModelBundle model_;
  EntityTrie trie_;
  std::shared_ptr<DemonstrationPool> pool_;
  std::unique_ptr<DemoRetriever> retriever_;
  std::vector<MentionInstance> queries_;
  LinkingContext ctx_;
};

TEST_F(LinkingTest, VariantsControlPromptShape) {
  for (const MentionInstance& q : queries_) {
    LinkingContext no_icl = ctx_;
    no_icl.prompt = ApplyVariant(ctx_.prompt, Variant::kNoIcl);
    // Only the query block remains: optional prefix plus one text span.
    EXPECT_EQ(BuildPrompt(no_icl, q).segments.size(), q.image_ref ? 2u : 1u);
    LinkingContext no_visual = ctx_;
    no_visual.prompt = ApplyVariant(ctx_.prompt, Variant::kNoVisual);
    EXPECT_EQ(BuildPrompt(no_visual, q).CountVisual(), 0u);
    EXPECT_GT(BuildPrompt(ctx_, q).Length(), BuildPrompt(no_icl, q).Length());
  }
}

TEST_F(LinkingTest, PredictionsAreKbEntitiesWithRankedTopK) {
  for (const Prediction& p : LinkAll(ctx_, queries_)) {
    auto ordinal = kb_.FindById(p.pred_id);
    ASSERT_TRUE(ordinal.has_value());
    EXPECT_EQ(kb_.at(*ordinal).name, p.pred);
    ASSERT_FALSE(p.topk.empty());
    EXPECT_EQ(p.topk.front().second, p.logprob);
    for (size_t i = 1; i < p.topk.size(); ++i) {
      EXPECT_GE(p.topk[i - 1].second, p.topk[i].second);
    }
  }
}

TEST_F(LinkingTest, ThreadCountDoesNotChangeReports) {
  std::string reference;
  for (const char* threads : {"1", "2", "3"}) {
    setenv("GEMEL_THREADS", threads, 1);
    EXPECT_EQ(WorkerCount(), static_cast<size_t>(std::atoi(threads)));
    std::vector<Prediction> preds = LinkAll(ctx_, queries_);
    EvalReport report = RunAblation(ctx_, Variant::kFull, queries_, 5);
    const std::string text = SerializePredictions(preds) + report.Dump();
    if (reference.empty()) reference = text;
    EXPECT_EQ(text, reference) << "threads=" << threads;
  }
  setenv("GEMEL_THREADS", "junk", 1);
  EXPECT_EQ(WorkerCount(), static_cast<size_t>(std::max(1, omp_get_max_threads())));
  unsetenv("GEMEL_THREADS");
}

TEST_F(LinkingTest, AblationReportsNameTheirVariant) {
  for (Variant v : {Variant::kFull, Variant::kNoVisual, Variant::kNoIcl}) {
    EvalReport r = RunAblation(ctx_, v, queries_, 5);
    EXPECT_EQ(r.variant, VariantName(v));
    EXPECT_EQ(r.n, queries_.size());
    EXPECT_EQ(r.common.n + r.tail.n, r.n);
  }
}

}  // namespace
}  // namespace gemel
