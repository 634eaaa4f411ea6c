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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "gemel/errors.h"
#include "gemel/kernels.h"
#include "gemel/rng.h"
#include "json.hpp"

namespace gemel {
namespace {

// Position-indexed view over a sequence of per-epoch shuffles.
class DataOrder {
 public:
  DataOrder(size_t items, uint64_t seed, std::string stream)
      : items_(items), seed_(seed), stream_(std::move(stream)) {}

  size_t At(size_t position) {
    const size_t epoch = position / items_;
    if (epoch != cached_epoch_) {
      perm_.resize(items_);
      std::iota(perm_.begin(), perm_.end(), size_t{0});
      Rng rng = Rng::Stream(seed_, stream_ + "/epoch" + std::to_string(epoch));
      rng.Shuffle(perm_);
      cached_epoch_ = epoch;
    }
    return perm_[position % items_];
  }

 private:
  size_t items_;
  uint64_t seed_;
  std::string stream_;
  std::vector<size_t> perm_;
  size_t cached_epoch_ = static_cast<size_t>(-1);
};

void WriteLog(std::ostream* log, size_t step, double loss, double lr) {
  if (log == nullptr) return;
  nlohmann::json line = {{"step", step}, {"loss", loss}, {"lr", lr}};
  *log << line.dump() << '\n';
}

void ClipGradients(std::span<Tensor* const> params, double max_norm) {
  double sq = 0;
  for (const Tensor* p : params) {
    for (double g : p->grad) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (!(norm > max_norm)) return;
  const double scale = max_norm / norm;
  for (Tensor* p : params) {
    for (double& g : p->grad) g *= scale;
  }
}

// Shared optimization loop. `micro_loss(item)` runs forward and backward for
// one item, accumulating into the parameters' grad buffers, and returns its
// loss.
TrainResult RunLoop(std::span<Tensor* const> params, std::vector<AdamState>& states,
                    size_t items, const TrainConfig& cfg, size_t first_step, DataOrder& order,
                    const std::function<double(size_t)>& micro_loss, std::ostream* log,
                    const StepCallback& on_step) {
  const size_t per_step = cfg.InstancesPerStep();
  const size_t total_steps = cfg.TotalSteps(items);
  const size_t total_items =
      cfg.max_steps > 0 ? total_steps * per_step : items * cfg.epochs;
  TrainResult result;
  result.steps = total_steps;
  for (size_t step = first_step; step <= total_steps; ++step) {
    for (Tensor* p : params) p->ZeroGrad();
    const size_t begin = (step - 1) * per_step;
    const size_t end = std::min(begin + per_step, total_items);
    double loss_sum = 0.0;
    for (size_t pos = begin; pos < end; ++pos) {
      const double loss = micro_loss(order.At(pos));
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss at step " + std::to_string(step));
      }
      loss_sum += loss;
    }
    if (cfg.clip_norm > 0) ClipGradients(params, cfg.clip_norm);
    const double lr = LrAt(step, total_steps, cfg);
    for (size_t i = 0; i < params.size(); ++i) {
      AdamWStep(params[i]->data, params[i]->grad, states[i], lr, cfg);
    }
    const double mean_loss = loss_sum / static_cast<double>(std::max<size_t>(end - begin, 1));
    result.step_losses.push_back(mean_loss);
    WriteLog(log, step, mean_loss, lr);
    if (on_step) on_step(step, mean_loss, lr);
  }
  for (Tensor* p : params) p->grad.clear();
  return result;
}

}  // namespace

void TrainConfig::Validate() const {
  if (!(lr > 0)) throw ValidationError("train lr must be positive");
  if (!(warmup_ratio >= 0 && warmup_ratio < 1)) {
    throw ValidationError("warmup_ratio must lie in [0, 1)");
  }
  if (epochs == 0 && max_steps == 0) throw ValidationError("epochs must be positive");
  if (grad_accum == 0 || batch == 0) throw ValidationError("grad_accum and batch must be positive");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) {
    throw ValidationError("adam betas must lie in [0, 1)");
  }
  if (!(eps > 0) || !(weight_decay >= 0)) throw ValidationError("bad eps or weight_decay");
  if (!(clip_norm >= 0)) throw ValidationError("clip_norm must be non-negative");
}

size_t TrainConfig::TotalSteps(size_t instances) const {
  if (max_steps > 0) return max_steps;
  const size_t per_step = InstancesPerStep();
  return (instances * epochs + per_step - 1) / per_step;
}

double TeacherForcingLoss(const Tensor& logits, std::span<const TokenId> targets) {
  if (logits.rows() != targets.size() || logits.shape.size() != 2) {
    throw ValidationError("teacher forcing needs one logit row per target (" +
                          std::to_string(logits.rows()) + " rows, " +
                          std::to_string(targets.size()) + " targets)");
  }
  const size_t vocab = logits.cols();
  std::vector<double> logp(logits.numel());
  kernels::LogSoftmax(logits.data, logp, targets.size(), vocab);
  double loss = 0.0;
  for (size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] >= vocab) throw ValidationError("target token outside the vocabulary");
    loss -= logp[i * vocab + targets[i]];
  }
  return loss;
}

double AnswerRegionLoss(const Tensor& logits, size_t answer_start,
                        std::span<const TokenId> targets) {
  if (answer_start == 0 || answer_start - 1 + targets.size() > logits.rows()) {
    throw ValidationError("answer region outside the logits");
  }
  const size_t vocab = logits.cols();
  const auto first = logits.data.begin() + static_cast<std::ptrdiff_t>((answer_start - 1) * vocab);
  Tensor region({targets.size(), vocab},
                std::vector<double>(first, first + static_cast<std::ptrdiff_t>(targets.size() * vocab)));
  return TeacherForcingLoss(region, targets);
}

double LrAt(size_t step, size_t total_steps, const TrainConfig& cfg) {
  const auto warmup = static_cast<size_t>(
      std::ceil(cfg.warmup_ratio * static_cast<double>(total_steps) - 1e-12));
  if (warmup > 0 && step < warmup) {
    return cfg.lr * static_cast<double>(step) / static_cast<double>(warmup);
  }
  if (!cfg.linear_decay || total_steps <= warmup) return cfg.lr;
  const double remaining = static_cast<double>(total_steps - step);
  return cfg.lr * std::max(remaining, 0.0) / static_cast<double>(total_steps - warmup);
}

void AdamWStep(std::span<double> param, std::span<const double> grad, AdamState& state,
               double lr, const TrainConfig& cfg) {
  if (grad.size() != param.size()) throw ValidationError("gradient shape does not match");
  for (size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw NumericError("non-finite gradient at coordinate " + std::to_string(i) +
                         " (optimizer step " + std::to_string(state.step + 1) + ")");
    }
  }
  if (state.m.empty()) {
    state.m.assign(param.size(), 0.0);
    state.v.assign(param.size(), 0.0);
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (size_t i = 0; i < param.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    param[i] -= lr * cfg.weight_decay * param[i];
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

std::vector<TokenSeq> MakeWindows(std::span<const TokenId> tokens, size_t window, size_t stride) {
  if (window == 0 || stride == 0) throw ValidationError("window and stride must be positive");
  std::vector<TokenSeq> out;
  for (size_t start = 0; start < tokens.size(); start += stride) {
    const size_t len = std::min(window, tokens.size() - start);
    if (len < 2) continue;
    out.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                     tokens.begin() + static_cast<std::ptrdiff_t>(start + len));
    if (start + len == tokens.size()) break;
  }
  return out;
}

Var AnswerLossOnTape(Tape& tape, ModelBundle& model, const PromptSequence& prompt,
                     std::span<const TokenId> answer) {
  const size_t prompt_len = prompt.Length();
  if (answer.empty()) throw ValidationError("empty answer");
  if (prompt_len == 0) throw ValidationError("empty prompt");
  Var emb = model.EmbedSequenceOnTape(tape, prompt, answer);
  Var hidden = model.lm.HiddenOnTape(tape, emb);
  Var region = ad::SliceRows(tape, hidden, prompt_len - 1, answer.size());
  return ad::CrossEntropy(tape, model.lm.LogitsOnTape(tape, region), answer);
}

Var WindowLossOnTape(Tape& tape, ModelBundle& model, std::span<const TokenId> window) {
  if (window.size() < 2) throw ValidationError("window shorter than two tokens");
  Var emb = model.lm.EmbedTokensOnTape(tape, window.first(window.size() - 1), 0);
  Var logits = model.lm.LogitsOnTape(tape, model.lm.HiddenOnTape(tape, emb));
  return ad::CrossEntropy(tape, logits, window.subspan(1));
}

TrainResult PretrainLm(ModelBundle& model, std::span<const TokenSeq> documents,
                       const PretrainConfig& cfg, uint64_t seed, std::ostream* log,
                       StepCallback on_step) {
  cfg.optim.Validate();
  const size_t window = cfg.window == 0 ? model.config.lm.max_len : cfg.window;
  if (window > model.config.lm.max_len) throw ValidationError("window exceeds max_len");
  const size_t stride = cfg.stride == 0 ? window : cfg.stride;
  std::vector<TokenSeq> windows;
  if (cfg.packed) {
    TokenSeq stream;
    for (const TokenSeq& doc : documents) {
      if (doc.empty()) continue;
      stream.insert(stream.end(), doc.begin(), doc.end());
      stream.push_back(special::kEos);
    }
    windows = MakeWindows(stream, window, stride);
  } else {
    for (const TokenSeq& doc : documents) {
      TokenSeq with_eos = doc;
      with_eos.push_back(special::kEos);
      for (TokenSeq& w : MakeWindows(with_eos, window, stride)) windows.push_back(std::move(w));
    }
  }
  if (windows.empty()) throw ValidationError("pretraining corpus yields no window");

  model.lm.SetTrainable(true);
  model.mapper.weight.requires_grad = false;
  std::vector<Tensor*> params;
  for (auto& [name, t] : model.lm.NamedParameters()) params.push_back(t);
  std::vector<AdamState> states(params.size());
  DataOrder order(windows.size(), seed, "data_order/pretrain");
  auto micro = [&](size_t item) {
    Tape tape;
    Var loss = WindowLossOnTape(tape, model, windows[item]);
    const double value = loss->data[0];
    tape.Backward(loss);
    return value;
  };
  TrainResult result =
      RunLoop(params, states, windows.size(), cfg.optim, 1, order, micro, log, on_step);
  model.lm.SetTrainable(false);
  model.ApplyStoragePrecision();
  return result;
}

TrainResult TrainMapper(ModelBundle& model, std::span<const TrainExample> examples,
                        const TrainConfig& cfg, uint64_t seed, std::ostream* log,
                        const AdamState* resume, StepCallback on_step) {
  cfg.Validate();
  if (examples.empty()) throw ValidationError("no training instances");
  model.lm.SetTrainable(false);
  model.mapper.weight.requires_grad = true;
  std::vector<Tensor*> params = {&model.mapper.weight};
  std::vector<AdamState> states(1);
  size_t first_step = 1;
  if (resume != nullptr) {
    states[0] = *resume;
    first_step = static_cast<size_t>(resume->step) + 1;
  }
  DataOrder order(examples.size(), seed, "data_order/mapper");
  auto micro = [&](size_t item) {
    Tape tape;
    Var loss = AnswerLossOnTape(tape, model, examples[item].prompt, examples[item].answer);
    const double value = loss->data[0];
    tape.Backward(loss);
    return value;
  };
  TrainResult result =
      RunLoop(params, states, examples.size(), cfg, first_step, order, micro, log, on_step);
  model.mapper.weight.requires_grad = false;
  result.state = std::move(states[0]);
  return result;
}

void PutOptimizerState(Checkpoint& ckpt, const AdamState& state, size_t total_steps) {
  if (!state.m.empty()) {
    ckpt.Put("opt.mapper.weight.m", DType::kF64, Tensor({state.m.size()}, state.m));
    ckpt.Put("opt.mapper.weight.v", DType::kF64, Tensor({state.v.size()}, state.v));
  }
  ckpt.meta["optimizer"] = {{"name", "adamw"}, {"step", state.step}, {"total_steps", total_steps}};
}

std::optional<AdamState> GetOptimizerState(const Checkpoint& ckpt) {
  if (!ckpt.meta.contains("optimizer")) return std::nullopt;
  AdamState state;
  state.step = ckpt.meta["optimizer"].value("step", uint64_t{0});
  const Checkpoint::Entry* m = ckpt.Find("opt.mapper.weight.m");
  const Checkpoint::Entry* v = ckpt.Find("opt.mapper.weight.v");
  if (m != nullptr && v != nullptr) {
    state.m = m->tensor.data;
    state.v = v->tensor.data;
  }
  return state;
}

}  // namespace gemel
