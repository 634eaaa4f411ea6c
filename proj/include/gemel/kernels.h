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

#ifndef GEMEL_KERNELS_H_
#define GEMEL_KERNELS_H_

// Row-parallel OpenMP kernels. Every output element is accumulated in a
// fixed order that does not depend on the thread count or on how many other
// rows are computed, so results are bit-identical across thread counts and
// between a full-sequence pass and an incremental (cached) pass.
//
// A serial reference of each kernel lives in kernels_reference.h for tests
// and benchmarks.

#include <cstddef>
#include <span>

namespace gemel::kernels {

using In = std::span<const double>;
using Out = std::span<double>;

// c[m,n] (+)= a[m,k] * b[k,n]
void MatMul(In a, In b, Out c, size_t m, size_t k, size_t n, bool accumulate = false);
// c[m,n] (+)= a[m,k] * b[n,k]^T
void MatMulNT(In a, In b, Out c, size_t m, size_t k, size_t n, bool accumulate = false);
// c[k,n] += a[m,k]^T * b[m,n]
void MatMulTNAccumulate(In a, In b, Out c, size_t m, size_t k, size_t n);

// y = x + bias broadcast over rows.
void AddRowBias(Out y, In bias, size_t rows, size_t cols);

inline constexpr double kLayerNormEps = 1e-5;

// Per-row normalization; `mean` and `rstd` (length rows) are saved for the
// backward pass when non-empty.
void LayerNorm(In x, In gamma, In beta, Out y, Out mean, Out rstd, size_t rows,
               size_t cols);
// Accumulates into dx, dgamma, dbeta. dgamma/dbeta may be empty.
void LayerNormBackward(In x, In gamma, In mean, In rstd, In dy, Out dx, Out dgamma,
                       Out dbeta, size_t rows, size_t cols);

// Exact (erf) GELU.
void Gelu(In x, Out y);
void GeluBackward(In x, In dy, Out dx);

// Multi-head causal attention. q has tq rows, k and v have tk rows, all of
// width d = heads * head_dim. Query row i sits at absolute position
// q_offset + i and attends to key rows j <= q_offset + i. `probs`, when
// non-empty, receives heads x tq x tk attention weights (zeros above the
// causal boundary).
void CausalAttention(In q, In k, In v, Out out, Out probs, size_t tq, size_t tk,
                     size_t d, size_t heads, size_t q_offset);
// Accumulates into dq, dk, dv (any may be empty) for the q_offset = 0 case.
void CausalAttentionBackward(In q, In k, In v, In probs, In dout, Out dq, Out dk,
                             Out dv, size_t t, size_t d, size_t heads);

// Row-wise log-softmax.
void LogSoftmax(In logits, Out out, size_t rows, size_t cols);

}  // namespace gemel::kernels

#endif  // GEMEL_KERNELS_H_
