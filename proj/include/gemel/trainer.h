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

#ifndef GEMEL_TRAINER_H_
#define GEMEL_TRAINER_H_

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "gemel/autodiff.h"
#include "gemel/model_bundle.h"
#include "gemel/prompt.h"
#include "gemel/tensor.h"

namespace gemel {

struct TrainConfig {
  double lr = 1e-6;
  double warmup_ratio = 0.10;
  size_t epochs = 5;
  size_t grad_accum = 16;
  size_t batch = 1;  // instances per micro-batch
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  // Linear decay to zero after warmup instead of a constant rate.
  bool linear_decay = false;
  // When non-zero, overrides the epoch-derived optimizer step count; the
  // data order then cycles through as many epochs as needed.
  size_t max_steps = 0;
  // Global gradient-norm clipping threshold; 0 disables it.
  double clip_norm = 0;

  // Throws ValidationError.
  void Validate() const;
  size_t InstancesPerStep() const { return batch * grad_accum; }
  size_t TotalSteps(size_t instances) const;
};

// Pretraining of the language model on token windows.
struct PretrainConfig {
  TrainConfig optim{.lr = 3e-4, .epochs = 1, .grad_accum = 1, .batch = 8, .clip_norm = 1.0};
  size_t window = 0;  // 0 means the model's max_len
  size_t stride = 0;  // 0 means the window length
  // Concatenate documents (separated by EOS) before windowing; otherwise
  // each document is windowed on its own.
  bool packed = true;
};

// -log-likelihood of `targets` under per-row logits [targets.size(), V].
// Throws ValidationError on a row/target count mismatch.
double TeacherForcingLoss(const Tensor& logits, std::span<const TokenId> targets);

// Same, reading only the answer region of full-sequence logits [T, V]:
// target i is predicted by row answer_start - 1 + i.
double AnswerRegionLoss(const Tensor& logits, size_t answer_start,
                        std::span<const TokenId> targets);

// Learning rate for 1-based `step` of `total_steps`.
double LrAt(size_t step, size_t total_steps, const TrainConfig& cfg);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  uint64_t step = 0;
};

// One decoupled-weight-decay AdamW update of `param` in place. Throws
// NumericError on a non-finite gradient.
void AdamWStep(std::span<double> param, std::span<const double> grad, AdamState& state,
               double lr, const TrainConfig& cfg);

// Windows of at most `window` tokens starting every `stride` tokens;
// windows shorter than two tokens are dropped, and slicing stops once a window
// reaches the end.
std::vector<TokenSeq> MakeWindows(std::span<const TokenId> tokens, size_t window, size_t stride);

// Summed answer-region cross-entropy for one prompt on a tape.
Var AnswerLossOnTape(Tape& tape, ModelBundle& model, const PromptSequence& prompt,
                     std::span<const TokenId> answer);

// Next-token loss over one window on a tape.
Var WindowLossOnTape(Tape& tape, ModelBundle& model, std::span<const TokenId> window);

struct TrainExample {
  PromptSequence prompt;
  TokenSeq answer;
};

struct TrainResult {
  std::vector<double> step_losses;  // mean loss per instance in each step
  size_t steps = 0;
  AdamState state;  // single parameter group for the mapper
};

using StepCallback = std::function<void(size_t step, double loss, double lr)>;

// Trains every LM parameter; the mapper is left untouched. Throws
// ValidationError when the corpus yields no window.
TrainResult PretrainLm(ModelBundle& model, std::span<const TokenSeq> documents,
                       const PretrainConfig& cfg, uint64_t seed, std::ostream* log = nullptr,
                       StepCallback on_step = nullptr);

// Trains only the mapper weight with teacher forcing over pre-built
// prompts. A non-null `resume` continues from a saved optimizer state.
TrainResult TrainMapper(ModelBundle& model, std::span<const TrainExample> examples,
                        const TrainConfig& cfg, uint64_t seed, std::ostream* log = nullptr,
                        const AdamState* resume = nullptr, StepCallback on_step = nullptr);

// Optimizer state stored alongside the model in a checkpoint.
void PutOptimizerState(Checkpoint& ckpt, const AdamState& state, size_t total_steps);
std::optional<AdamState> GetOptimizerState(const Checkpoint& ckpt);

}  // namespace gemel

#endif  // GEMEL_TRAINER_H_
