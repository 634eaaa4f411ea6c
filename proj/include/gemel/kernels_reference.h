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

#ifndef GEMEL_KERNELS_REFERENCE_H_
#define GEMEL_KERNELS_REFERENCE_H_

// Straight-line serial versions of the kernels in kernels.h, written for
// clarity. Used as the comparison point in kernel tests and benchmarks.

#include <cstddef>
#include <span>

namespace gemel::kernels::reference {

using In = std::span<const double>;
using Out = std::span<double>;

void MatMul(In a, In b, Out c, size_t m, size_t k, size_t n);
void MatMulNT(In a, In b, Out c, size_t m, size_t k, size_t n);
void MatMulTN(In a, In b, Out c, size_t m, size_t k, size_t n);
void LayerNorm(In x, In gamma, In beta, Out y, size_t rows, size_t cols);
void CausalAttention(In q, In k, In v, Out out, size_t tq, size_t tk, size_t d,
                     size_t heads, size_t q_offset);
void LogSoftmax(In logits, Out out, size_t rows, size_t cols);

}  // namespace gemel::kernels::reference

#endif  // GEMEL_KERNELS_REFERENCE_H_
