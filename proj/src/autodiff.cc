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

#include "gemel/autodiff.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "gemel/errors.h"
#include "gemel/kernels.h"

namespace gemel {

Var Tape::Watch(Tensor& t) {
  if (t.requires_grad && !t.has_grad()) t.ZeroGrad();
  return Var{&t};
}

Var Tape::Constant(Tensor t) {
  t.requires_grad = false;
  t.grad.clear();
  owned_.push_back(std::move(t));
  return Var{&owned_.back()};
}

Var Tape::Record(Tensor value, bool requires_grad) {
  value.requires_grad = requires_grad;
  if (requires_grad) value.ZeroGrad();
  owned_.push_back(std::move(value));
  return Var{&owned_.back()};
}

void Tape::AddBackward(std::function<void()> backward) {
  backward_.push_back(std::move(backward));
}

void Tape::Backward(Var loss) {
  if (backward_done_) {
    throw ValidationError("Backward called twice without a new forward pass");
  }
  if (loss->numel() != 1) throw ValidationError("Backward needs a scalar loss");
  backward_done_ = true;
  if (!loss.requires_grad()) return;
  loss->grad[0] += 1.0;
  for (auto it = backward_.rbegin(); it != backward_.rend(); ++it) (*it)();
}

namespace ad {
namespace {

void CheckShape(bool ok, const char* op) {
  if (!ok) throw ValidationError(std::string("shape mismatch in ") + op);
}

}  // namespace

Var MatMul(Tape& tape, Var a, Var b) {
  const size_t m = a->rows(), k = a->cols(), n = b->cols();
  CheckShape(b->rows() == k, "MatMul");
  Tensor out({m, n});
  kernels::MatMul(a->data, b->data, out.data, m, k, n);
  const bool rg = a.requires_grad() || b.requires_grad();
  Var o = tape.Record(std::move(out), rg);
  if (rg) {
    tape.AddBackward([pa = a.t, pb = b.t, po = o.t, m, k, n] {
      // dA = dC * B^T, dB = A^T * dC
      if (pa->requires_grad) kernels::MatMulNT(po->grad, pb->data, pa->grad, m, n, k, true);
      if (pb->requires_grad) kernels::MatMulTNAccumulate(pa->data, po->grad, pb->grad, m, k, n);
    });
  }
  return o;
}

Var MatMulNT(Tape& tape, Var a, Var b) {
  const size_t m = a->rows(), k = a->cols(), n = b->rows();
  CheckShape(b->cols() == k, "MatMulNT");
  Tensor out({m, n});
  kernels::MatMulNT(a->data, b->data, out.data, m, k, n);
  const bool rg = a.requires_grad() || b.requires_grad();
  Var o = tape.Record(std::move(out), rg);
  if (rg) {
    tape.AddBackward([pa = a.t, pb = b.t, po = o.t, m, k, n] {
      // dA = dC * B, dB = dC^T * A
      if (pa->requires_grad) kernels::MatMul(po->grad, pb->data, pa->grad, m, n, k, true);
      if (pb->requires_grad) kernels::MatMulTNAccumulate(po->grad, pa->data, pb->grad, m, n, k);
    });
  }
  return o;
}

Var Add(Tape& tape, Var a, Var b) {
  CheckShape(a->numel() == b->numel(), "Add");
  Tensor out(a->shape);
  for (size_t i = 0; i < out.numel(); ++i) out.data[i] = a->data[i] + b->data[i];
  const bool rg = a.requires_grad() || b.requires_grad();
  Var o = tape.Record(std::move(out), rg);
  if (rg) {
    tape.AddBackward([pa = a.t, pb = b.t, po = o.t] {
      for (Tensor* in : {pa, pb}) {
        if (!in->requires_grad) continue;
        for (size_t i = 0; i < po->numel(); ++i) in->grad[i] += po->grad[i];
      }
    });
  }
  return o;
}

Var AddBias(Tape& tape, Var x, Var bias) {
  const size_t rows = x->rows(), cols = x->cols();
  CheckShape(bias->numel() == cols, "AddBias");
  Tensor out = *x;
  out.grad.clear();
  kernels::AddRowBias(out.data, bias->data, rows, cols);
  const bool rg = x.requires_grad() || bias.requires_grad();
  Var o = tape.Record(std::move(out), rg);
  if (rg) {
    tape.AddBackward([px = x.t, pb = bias.t, po = o.t, rows, cols] {
      if (px->requires_grad) {
        for (size_t i = 0; i < po->numel(); ++i) px->grad[i] += po->grad[i];
      }
      if (pb->requires_grad) {
        for (size_t r = 0; r < rows; ++r) {
          for (size_t c = 0; c < cols; ++c) pb->grad[c] += po->grad[r * cols + c];
        }
      }
    });
  }
  return o;
}

Var LayerNorm(Tape& tape, Var x, Var gamma, Var beta) {
  const size_t rows = x->rows(), cols = x->cols();
  CheckShape(gamma->numel() == cols && beta->numel() == cols, "LayerNorm");
  Tensor out(x->shape);
  std::vector<double> mean(rows), rstd(rows);
  kernels::LayerNorm(x->data, gamma->data, beta->data, out.data, mean, rstd, rows, cols);
  const bool rg = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
  Var o = tape.Record(std::move(out), rg);
  if (rg) {
    tape.AddBackward([px = x.t, pg = gamma.t, pb = beta.t, po = o.t, rows, cols,
                      mean = std::move(mean), rstd = std::move(rstd)] {
      kernels::LayerNormBackward(
          px->data, pg->data, mean, rstd, po->grad,
          px->requires_grad ? std::span<double>(px->grad) : std::span<double>(),
          pg->requires_grad ? std::span<double>(pg->grad) : std::span<double>(),
          pb->requires_grad ? std::span<double>(pb->grad) : std::span<double>(), rows,
          cols);
    });
  }
  return o;
}

Var Gelu(Tape& tape, Var x) {
  Tensor out(x->shape);
  kernels::Gelu(x->data, out.data);
  Var o = tape.Record(std::move(out), x.requires_grad());
  if (x.requires_grad()) {
    tape.AddBackward([px = x.t, po = o.t] {
      kernels::GeluBackward(px->data, po->grad, px->grad);
    });
  }
  return o;
}

Var CausalSelfAttention(Tape& tape, Var q, Var k, Var v, size_t heads) {
  const size_t t = q->rows(), d = q->cols();
  CheckShape(k->rows() == t && v->rows() == t && k->cols() == d && v->cols() == d &&
                 heads > 0 && d % heads == 0,
             "CausalSelfAttention");
  Tensor out({t, d});
  const bool rg = q.requires_grad() || k.requires_grad() || v.requires_grad();
  std::vector<double> probs(rg ? heads * t * t : 0);
  kernels::CausalAttention(q->data, k->data, v->data, out.data, probs, t, t, d, heads, 0);
  Var o = tape.Record(std::move(out), rg);
  if (rg) {
    tape.AddBackward([pq = q.t, pk = k.t, pv = v.t, po = o.t, t, d, heads,
                      probs = std::move(probs)] {
      auto grad_or_empty = [](Tensor* x) {
        return x->requires_grad ? std::span<double>(x->grad) : std::span<double>();
      };
      kernels::CausalAttentionBackward(pq->data, pk->data, pv->data, probs, po->grad,
                                       grad_or_empty(pq), grad_or_empty(pk),
                                       grad_or_empty(pv), t, d, heads);
    });
  }
  return o;
}

Var Embedding(Tape& tape, Var table, std::span<const TokenId> ids) {
  const size_t d = table->cols();
  Tensor out({ids.size(), d});
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= table->rows()) throw ValidationError("token id outside embedding table");
    std::copy_n(table->data.begin() + ids[i] * d, d, out.data.begin() + i * d);
  }
  Var o = tape.Record(std::move(out), table.requires_grad());
  if (table.requires_grad()) {
    tape.AddBackward([pt = table.t, po = o.t, d,
                      ids = std::vector<TokenId>(ids.begin(), ids.end())] {
      for (size_t i = 0; i < ids.size(); ++i) {
        for (size_t c = 0; c < d; ++c) pt->grad[ids[i] * d + c] += po->grad[i * d + c];
      }
    });
  }
  return o;
}

Var SliceRows(Tape& tape, Var x, size_t start, size_t count) {
  const size_t cols = x->cols();
  CheckShape(start + count <= x->rows(), "SliceRows");
  Tensor out({count, cols});
  std::copy_n(x->data.begin() + start * cols, count * cols, out.data.begin());
  Var o = tape.Record(std::move(out), x.requires_grad());
  if (x.requires_grad()) {
    tape.AddBackward([px = x.t, po = o.t, start, cols] {
      for (size_t i = 0; i < po->numel(); ++i) px->grad[start * cols + i] += po->grad[i];
    });
  }
  return o;
}

Var ConcatRows(Tape& tape, std::span<const Var> parts) {
  CheckShape(!parts.empty(), "ConcatRows");
  const size_t cols = parts[0]->cols();
  size_t rows = 0;
  bool rg = false;
  for (const Var& p : parts) {
    CheckShape(p->cols() == cols, "ConcatRows");
    rows += p->rows();
    rg = rg || p.requires_grad();
  }
  Tensor out({rows, cols});
  size_t offset = 0;
  for (const Var& p : parts) {
    std::copy(p->data.begin(), p->data.end(), out.data.begin() + offset);
    offset += p->numel();
  }
  Var o = tape.Record(std::move(out), rg);
  if (rg) {
    tape.AddBackward([po = o.t, parts = std::vector<Var>(parts.begin(), parts.end())] {
      size_t offset = 0;
      for (const Var& p : parts) {
        if (p.requires_grad()) {
          for (size_t i = 0; i < p->numel(); ++i) p->grad[i] += po->grad[offset + i];
        }
        offset += p->numel();
      }
    });
  }
  return o;
}

Var Reshape(Tape& tape, Var x, std::vector<size_t> shape) {
  CheckShape(Tensor::NumElements(shape) == x->numel(), "Reshape");
  Tensor out(std::move(shape), x->data);
  Var o = tape.Record(std::move(out), x.requires_grad());
  if (x.requires_grad()) {
    tape.AddBackward([px = x.t, po = o.t] {
      for (size_t i = 0; i < po->numel(); ++i) px->grad[i] += po->grad[i];
    });
  }
  return o;
}

Var SumAll(Tape& tape, Var x) {
  double total = 0.0;
  for (double v : x->data) total += v;
  Var o = tape.Record(Tensor({1}, total), x.requires_grad());
  if (x.requires_grad()) {
    tape.AddBackward([px = x.t, po = o.t] {
      for (double& g : px->grad) g += po->grad[0];
    });
  }
  return o;
}

Var CrossEntropy(Tape& tape, Var logits, std::span<const TokenId> targets) {
  const size_t rows = logits->rows(), cols = logits->cols();
  CheckShape(targets.size() == rows, "CrossEntropy");
  std::vector<double> log_probs(rows * cols);
  kernels::LogSoftmax(logits->data, log_probs, rows, cols);
  double loss = 0.0;
  for (size_t i = 0; i < rows; ++i) {
    if (targets[i] >= cols) throw ValidationError("target id outside logits");
    loss -= log_probs[i * cols + targets[i]];
  }
  Var o = tape.Record(Tensor({1}, loss), logits.requires_grad());
  if (logits.requires_grad()) {
    tape.AddBackward([pl = logits.t, po = o.t, rows, cols, log_probs = std::move(log_probs),
                      targets = std::vector<TokenId>(targets.begin(), targets.end())] {
      const double g = po->grad[0];
      for (size_t i = 0; i < rows; ++i) {
        for (size_t j = 0; j < cols; ++j) {
          const double p = std::exp(log_probs[i * cols + j]);
          pl->grad[i * cols + j] += g * (p - (j == targets[i] ? 1.0 : 0.0));
        }
      }
    });
  }
  return o;
}

}  // namespace ad
}  // namespace gemel
