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

#ifndef GEMEL_AUTODIFF_H_
#define GEMEL_AUTODIFF_H_

#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "gemel/tensor.h"
#include "gemel/tokenizer.h"

namespace gemel {

// Handle to a tensor owned by a Tape or watched by it.
struct Var {
  Tensor* t = nullptr;
  Tensor& operator*() const { return *t; }
  Tensor* operator->() const { return t; }
  bool requires_grad() const { return t->requires_grad; }
};

// Records a forward computation and replays it backwards. Creation order is
// a topological order, so the backward pass walks the recorded closures in
// reverse. A tape supports exactly one Backward call.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Wraps an external tensor. When it requires a gradient, the backward pass
  // accumulates into its grad buffer (allocated here if missing, never
  // cleared), which is what gradient accumulation across tapes relies on.
  Var Watch(Tensor& t);
  // Owned tensor that never receives a gradient.
  Var Constant(Tensor t);

  // `loss` must hold one element. Throws ValidationError on a second call.
  void Backward(Var loss);

  // Used by op implementations: store an intermediate, then register the
  // closure that propagates its gradient to the inputs.
  Var Record(Tensor value, bool requires_grad);
  void AddBackward(std::function<void()> backward);

 private:
  std::deque<Tensor> owned_;
  std::vector<std::function<void()>> backward_;
  bool backward_done_ = false;
};

namespace ad {

// a[m,k] * b[k,n]
Var MatMul(Tape& tape, Var a, Var b);
// a[m,k] * b[n,k]^T
Var MatMulNT(Tape& tape, Var a, Var b);
Var Add(Tape& tape, Var a, Var b);
// x[m,n] + bias[n] on every row.
Var AddBias(Tape& tape, Var x, Var bias);
Var LayerNorm(Tape& tape, Var x, Var gamma, Var beta);
Var Gelu(Tape& tape, Var x);
// q, k, v: [t, d]; causal multi-head attention.
Var CausalSelfAttention(Tape& tape, Var q, Var k, Var v, size_t heads);
// Rows of table[V, d] selected by ids -> [ids.size(), d].
Var Embedding(Tape& tape, Var table, std::span<const TokenId> ids);
Var SliceRows(Tape& tape, Var x, size_t start, size_t count);
Var ConcatRows(Tape& tape, std::span<const Var> parts);
Var Reshape(Tape& tape, Var x, std::vector<size_t> shape);
Var SumAll(Tape& tape, Var x);
// Sum over rows of -log_softmax(logits[i])[targets[i]].
Var CrossEntropy(Tape& tape, Var logits, std::span<const TokenId> targets);

}  // namespace ad
}  // namespace gemel

#endif  // GEMEL_AUTODIFF_H_
