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

#include "gemel/trainer.h"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gemel/autodiff.h"
#include "gemel/checks.h"
#include "gemel/decoder.h"
#include "gemel/errors.h"
#include "gemel/kernels.h"
#include "gemel/rng.h"
#include "oracle_values.h"
#include "test_util.h"

namespace gemel {
namespace {

TEST(TeacherForcingLossTest, AnalyticValues) {
  Tensor uniform({3, 100});
  TokenSeq targets = {5, 17, 99};
  EXPECT_NEAR(TeacherForcingLoss(uniform, targets), 3 * std::log(100.0), 1e-9);
  EXPECT_NEAR(TeacherForcingLoss(uniform, targets), 13.815510557964274, 1e-9);
  Tensor two({1, 2});
  EXPECT_NEAR(TeacherForcingLoss(two, TokenSeq{0}), 0.6931471805599453, 1e-9);
  Tensor peaked({2, 4}, std::vector<double>{500, 0, 0, 0, 0, 0, 500, 0});
  EXPECT_NEAR(TeacherForcingLoss(peaked, TokenSeq{0, 2}), 0.0, 1e-12);
  EXPECT_THROW(TeacherForcingLoss(uniform, TokenSeq{1, 2}), ValidationError);
}

TEST(TeacherForcingLossTest, NonNegativeOnRandomLogits) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 1 + rng.UniformInt(5), v = 2 + rng.UniformInt(20);
    Tensor logits({n, v});
    for (double& x : logits.data) x = rng.Normal(0, 5);
    TokenSeq targets(n);
    for (auto& t : targets) t = static_cast<TokenId>(rng.UniformInt(v));
    EXPECT_GE(TeacherForcingLoss(logits, targets), 0.0);
  }
}

TEST(TeacherForcingLossTest, PromptRegionIsMasked) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t prompt = 1 + rng.UniformInt(6), answer = 1 + rng.UniformInt(4), v = 7;
    Tensor logits({prompt + answer, v});
    for (double& x : logits.data) x = rng.Normal();
    TokenSeq targets(answer);
    for (auto& t : targets) t = static_cast<TokenId>(rng.UniformInt(v));
    const double base = AnswerRegionLoss(logits, prompt, targets);
    // Rows 0..prompt-2 only predict prompt tokens.
    for (size_t i = 0; i + 1 < prompt; ++i) {
      for (size_t c = 0; c < v; ++c) logits.data[i * v + c] = rng.Normal(0, 10);
    }
    EXPECT_EQ(AnswerRegionLoss(logits, prompt, targets), base);
    Tensor rows({answer, v});
    std::copy(logits.data.begin() + (prompt - 1) * v,
              logits.data.begin() + (prompt - 1 + answer) * v, rows.data.begin());
    EXPECT_EQ(TeacherForcingLoss(rows, targets), base);
  }
}

TEST(LrScheduleTest, WarmupExamples) {
  TrainConfig cfg;
  cfg.lr = 2.0;
  EXPECT_DOUBLE_EQ(LrAt(5, 100, cfg), 1.0);
  EXPECT_DOUBLE_EQ(LrAt(1, 100, cfg), 0.2);
  EXPECT_DOUBLE_EQ(LrAt(10, 100, cfg), 2.0);
  EXPECT_DOUBLE_EQ(LrAt(100, 100, cfg), 2.0);
  cfg.warmup_ratio = 0;
  EXPECT_DOUBLE_EQ(LrAt(1, 100, cfg), 2.0);
  EXPECT_DOUBLE_EQ(LrAt(37, 100, cfg), 2.0);
  // ceil(0.1 * 15) = 2 warmup steps.
  cfg.warmup_ratio = 0.1;
  EXPECT_DOUBLE_EQ(LrAt(1, 15, cfg), 1.0);
  EXPECT_DOUBLE_EQ(LrAt(2, 15, cfg), 2.0);
  cfg.linear_decay = true;
  EXPECT_DOUBLE_EQ(LrAt(2, 12, cfg), 2.0);
  EXPECT_LT(LrAt(11, 12, cfg), LrAt(5, 12, cfg));
  EXPECT_GE(LrAt(12, 12, cfg), 0.0);
}

TEST(AdamWTest, FirstStepMovesByLearningRate) {
  TrainConfig cfg;
  cfg.weight_decay = 0;
  std::vector<double> p = {0.0};
  std::vector<double> g = {1.0};
  AdamState state;
  AdamWStep(p, g, state, 1e-3, cfg);
  EXPECT_NEAR(p[0], oracle::kAdamWFirstStepNoDecay[0], 1e-18);
  EXPECT_NEAR(p[0], -1e-3 / (1 + 1e-8), 1e-18);
  EXPECT_EQ(state.step, 1u);
}

TEST(AdamWTest, MultiStepMatchesOracle) {
  TrainConfig cfg;
  cfg.weight_decay = 0.01;
  std::vector<double> p = {1.0};
  AdamState state;
  for (double g : {1.0, -2.0, 0.5}) {
    std::vector<double> grad = {g};
    AdamWStep(p, grad, state, 0.1, cfg);
  }
  EXPECT_NEAR(p[0], oracle::kAdamWThreeSteps[0], 1e-15);
}

TEST(AdamWTest, ZeroGradientAndPureDecay) {
  TrainConfig cfg;
  cfg.weight_decay = 0;
  std::vector<double> p = {1.5, -2.0};
  std::vector<double> zero = {0.0, 0.0};
  AdamState state;
  AdamWStep(p, zero, state, 0.1, cfg);
  EXPECT_EQ(p, (std::vector<double>{1.5, -2.0}));
  cfg.weight_decay = 0.5;
  AdamState fresh;
  AdamWStep(p, zero, fresh, 0.1, cfg);
  EXPECT_DOUBLE_EQ(p[0], 1.5 * (1 - 0.1 * 0.5));
  EXPECT_DOUBLE_EQ(p[1], -2.0 * (1 - 0.1 * 0.5));
}

TEST(AdamWTest, NonFiniteGradientAborts) {
  TrainConfig cfg;
  std::vector<double> p = {1.0};
  std::vector<double> g = {NAN};
  AdamState state;
  EXPECT_THROW(AdamWStep(p, g, state, 0.1, cfg), NumericError);
  g = {INFINITY};
  EXPECT_THROW(AdamWStep(p, g, state, 0.1, cfg), NumericError);
}

TEST(TrainConfigTest, StepArithmeticAndValidation) {
  TrainConfig cfg;
  EXPECT_EQ(cfg.TotalSteps(16), 5u);
  EXPECT_EQ(cfg.TotalSteps(17), 6u);
  EXPECT_EQ(cfg.TotalSteps(100), 32u);
  cfg.max_steps = 7;
  EXPECT_EQ(cfg.TotalSteps(100), 7u);
  cfg.warmup_ratio = 1.0;
  EXPECT_THROW(cfg.Validate(), ValidationError);
  cfg.warmup_ratio = 0.1;
  cfg.grad_accum = 0;
  EXPECT_THROW(cfg.Validate(), ValidationError);
}

TEST(WindowsTest, SlicingExamples) {
  TokenSeq tokens(10);
  for (size_t i = 0; i < 10; ++i) tokens[i] = static_cast<TokenId>(10 + i);
  std::vector<TokenSeq> w = MakeWindows(tokens, 4, 4);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[2], (TokenSeq{18, 19}));
  EXPECT_EQ(MakeWindows(tokens, 4, 2).size(), 4u);
  EXPECT_EQ(MakeWindows(TokenSeq{1}, 4, 4).size(), 0u);
  EXPECT_EQ(MakeWindows(tokens, 9, 9).size(), 1u);
}

class MapperTrainingTest : public ::testing::Test {
 protected:
  MapperTrainingTest() {
    kb_ = testing::MakeKb({"red fox", "blue owl", "green frog"});
    vocab_ = testing::VocabFor(kb_, "it was seen near the lake");
    TinyModelSpec spec;
    spec.init_std = 0.1;
    model_ = MakeRandomModel(vocab_, spec, 4);
    model_.mapper.weight.data.assign(model_.mapper.weight.numel(), 0.0);
    const std::vector<std::string> golds = {"Q1", "Q2", "Q3", "Q1"};
    for (size_t i = 0; i < golds.size(); ++i) {
      MentionInstance inst = testing::MakeMention("m" + std::to_string(i), "it was seen near the lake",
                                                  "it", golds[i], "img" + std::to_string(i));
      PromptOptions options;
      options.prefix_len = spec.prefix_len;
      examples_.push_back({AssemblePrompt(vocab_, kb_, {}, inst, options),
                           AnswerTokens(vocab_, kb_, golds[i])});
    }
  }
  KnowledgeBase kb_;
  Vocabulary vocab_;
  ModelBundle model_;
  std::vector<TrainExample> examples_;
};

TEST_F(MapperTrainingTest, AnswerLossEqualsSequentialFactorization) {
  for (const TrainExample& ex : examples_) {
    Tape tape;
    const double loss = AnswerLossOnTape(tape, model_, ex.prompt, ex.answer)->data[0];
    // -log of the product of per-token probabilities from one-token steps.
    PromptCache cache = model_.lm.Encode(model_.EmbedSequence(ex.prompt));
    double logprob = 0;
    std::vector<double> row = cache.last_logits.data, lp(row.size());
    for (size_t i = 0; i < ex.answer.size(); ++i) {
      kernels::LogSoftmax(row, lp, 1, row.size());
      logprob += lp[ex.answer[i]];
      TokenSeq prefix(ex.answer.begin(), ex.answer.begin() + i + 1);
      Tensor ext = model_.lm.ExtendLogits(cache, prefix);
      auto last = ext.row(ext.rows() - 1);
      row.assign(last.begin(), last.end());
    }
    EXPECT_NEAR(loss, -logprob, 1e-6);
    EXPECT_NEAR(loss, -ScoreSequence(model_, ex.prompt, ex.answer), 1e-6);
  }
}

TEST_F(MapperTrainingTest, AccumulationEqualsSummedGradientStep) {
  TrainConfig cfg;
  cfg.lr = 0.05;
  cfg.warmup_ratio = 0;
  cfg.epochs = 1;
  cfg.weight_decay = 0.01;
  std::span<const TrainExample> two(examples_.data(), 2);

  ModelBundle accumulated = model_;
  cfg.grad_accum = 2;
  cfg.batch = 1;
  TrainMapper(accumulated, two, cfg, 1);

  ModelBundle batched = model_;
  cfg.grad_accum = 1;
  cfg.batch = 2;
  TrainMapper(batched, two, cfg, 1);

  // Manual: summed gradient, one AdamW step.
  ModelBundle manual = model_;
  manual.mapper.weight.requires_grad = true;
  manual.mapper.weight.ZeroGrad();
  for (const TrainExample& ex : two) {
    Tape tape;
    tape.Backward(AnswerLossOnTape(tape, manual, ex.prompt, ex.answer));
  }
  AdamState state;
  AdamWStep(manual.mapper.weight.data, manual.mapper.weight.grad, state, cfg.lr, cfg);

  EXPECT_EQ(accumulated.mapper.weight.data, manual.mapper.weight.data);
  EXPECT_EQ(batched.mapper.weight.data, manual.mapper.weight.data);
  EXPECT_NE(manual.mapper.weight.data, model_.mapper.weight.data);
}

TEST_F(MapperTrainingTest, FreezeContractOnlyMapperChanges) {
  Checkpoint before = model_.ToCheckpoint({});
  TrainConfig cfg;
  cfg.lr = 0.05;
  cfg.grad_accum = 2;
  cfg.epochs = 3;
  ModelBundle trained = model_;
  TrainResult result = TrainMapper(trained, examples_, cfg, 3);
  EXPECT_EQ(result.steps, 6u);
  EXPECT_EQ(result.step_losses.size(), 6u);
  Checkpoint after = trained.ToCheckpoint({});
  ASSERT_EQ(before.tensors.size(), after.tensors.size());
  for (size_t i = 0; i < before.tensors.size(); ++i) {
    const bool same = Checkpoint::EncodePayload(before.tensors[i]) ==
                      Checkpoint::EncodePayload(after.tensors[i]);
    EXPECT_EQ(same, before.tensors[i].name != "mapper.weight") << before.tensors[i].name;
  }
  EXPECT_EQ(trained.features, model_.features);
  EXPECT_FALSE(trained.lm.token_embedding().requires_grad);
}

TEST_F(MapperTrainingTest, LogLinesAndDeterminism) {
  TrainConfig cfg;
  cfg.lr = 0.05;
  cfg.grad_accum = 2;
  cfg.epochs = 2;
  std::ostringstream log1, log2;
  ModelBundle a = model_, b = model_;
  TrainMapper(a, examples_, cfg, 9, &log1);
  TrainMapper(b, examples_, cfg, 9, &log2);
  EXPECT_EQ(log1.str(), log2.str());
  EXPECT_EQ(a.mapper.weight.data, b.mapper.weight.data);
  std::istringstream lines(log1.str());
  std::string line;
  size_t count = 0;
  while (std::getline(lines, line)) {
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["step"], ++count);
    EXPECT_TRUE(j["loss"].is_number());
    EXPECT_TRUE(j["lr"].is_number());
  }
  EXPECT_EQ(count, 4u);
}

TEST_F(MapperTrainingTest, ResumeMatchesUninterruptedRun) {
  TrainConfig cfg;
  cfg.lr = 0.05;
  cfg.warmup_ratio = 0;
  cfg.grad_accum = 1;
  cfg.max_steps = 6;
  ModelBundle full = model_;
  TrainResult full_result = TrainMapper(full, examples_, cfg, 2);
  EXPECT_EQ(full_result.state.step, 6u);

  TrainConfig first = cfg;
  first.max_steps = 3;
  ModelBundle resumed = model_;
  TrainResult head = TrainMapper(resumed, examples_, first, 2);
  EXPECT_EQ(head.state.step, 3u);
  TrainResult tail = TrainMapper(resumed, examples_, cfg, 2, nullptr, &head.state);
  EXPECT_EQ(tail.step_losses.size(), 3u);
  EXPECT_EQ(resumed.mapper.weight.data, full.mapper.weight.data);
  EXPECT_EQ(tail.state.m, full_result.state.m);
}

TEST_F(MapperTrainingTest, MissingGoldAndBadConfigRejected) {
  TrainConfig cfg;
  EXPECT_THROW(TrainMapper(model_, {}, cfg, 0), ValidationError);
  cfg.lr = 0;
  EXPECT_THROW(TrainMapper(model_, examples_, cfg, 0), ValidationError);
}

TEST(OptimizerStateTest, CheckpointRoundTrip) {
  AdamState s;
  s.m = {1, 2};
  s.v = {3, 4};
  s.step = 17;
  Checkpoint ckpt;
  PutOptimizerState(ckpt, s, 40);
  Checkpoint back = Checkpoint::Deserialize(ckpt.Serialize());
  auto got = GetOptimizerState(back);
  ASSERT_TRUE(got.has_value());
  EXPECT_EQ(got->m, s.m);
  EXPECT_EQ(got->v, s.v);
  EXPECT_EQ(got->step, 17u);
  EXPECT_FALSE(GetOptimizerState(Checkpoint()).has_value());
}

class PretrainTest : public ::testing::Test {
 protected:
  PretrainTest() {
    kb_ = testing::MakeKb({"the cat", "a dog"});
    vocab_ = testing::VocabFor(kb_, "the cat sat on the mat while a dog slept");
    TokenSeq sentence = Tokenize(vocab_, "the cat sat on the mat while a dog slept");
    docs_.assign(50, sentence);
  }
  ModelBundle FreshModel() {
    ModelConfig cfg;
    cfg.d_v = 4;
    cfg.lm.d_model = 16;
    cfg.lm.heads = 2;
    cfg.lm.layers = 1;
    cfg.lm.max_len = 32;
    return ModelBundle::Initialize(
        cfg, vocab_, std::make_shared<VisionFeatureStore>(VisionFeatureStore::SyntheticHash(4)), 1);
  }
  KnowledgeBase kb_;
  Vocabulary vocab_;
  std::vector<TokenSeq> docs_;
};

TEST_F(PretrainTest, LossTrendsDownAndIsDeterministic) {
  PretrainConfig cfg;
  cfg.optim.lr = 3e-3;
  cfg.optim.batch = 2;
  cfg.optim.max_steps = 100;
  cfg.window = 16;
  ModelBundle a = FreshModel();
  TrainResult ra = PretrainLm(a, docs_, cfg, 7);
  ASSERT_EQ(ra.step_losses.size(), 100u);
  // Moving averages over 10-step blocks strictly decrease.
  std::vector<double> blocks;
  for (size_t b = 0; b < 10; ++b) {
    double s = 0;
    for (size_t i = 0; i < 10; ++i) s += ra.step_losses[b * 10 + i];
    blocks.push_back(s / 10);
  }
  for (size_t b = 1; b < blocks.size(); ++b) EXPECT_LT(blocks[b], blocks[b - 1]) << b;
  ModelBundle b = FreshModel();
  TrainResult rb = PretrainLm(b, docs_, cfg, 7);
  EXPECT_EQ(ra.step_losses, rb.step_losses);
  EXPECT_EQ(a.lm.token_embedding().data, b.lm.token_embedding().data);
  EXPECT_EQ(a.mapper.weight.data, FreshModel().mapper.weight.data);
}

TEST_F(PretrainTest, EmptyCorpusRejected) {
  ModelBundle m = FreshModel();
  PretrainConfig cfg;
  std::vector<TokenSeq> none;
  EXPECT_THROW(PretrainLm(m, none, cfg, 0), ValidationError);
  cfg.packed = false;
  std::vector<TokenSeq> empty_docs(3);
  EXPECT_THROW(PretrainLm(m, empty_docs, cfg, 0), ValidationError);
}

}  // namespace
}  // namespace gemel
