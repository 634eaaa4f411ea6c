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

#include "gemel/kernels_reference.h"

#include <cmath>
#include <vector>

namespace gemel::kernels::reference {

void MatMul(In a, In b, Out c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (size_t p = 0; p < k; ++p) sum += a[i * k + p] * b[p * n + j];
      c[i * n + j] = sum;
    }
  }
}

void MatMulNT(In a, In b, Out c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (size_t p = 0; p < k; ++p) sum += a[i * k + p] * b[j * k + p];
      c[i * n + j] = sum;
    }
  }
}

void MatMulTN(In a, In b, Out c, size_t m, size_t k, size_t n) {
  for (size_t p = 0; p < k; ++p) {
    for (size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (size_t i = 0; i < m; ++i) sum += a[i * k + p] * b[i * n + j];
      c[p * n + j] = sum;
    }
  }
}

void LayerNorm(In x, In gamma, In beta, Out y, size_t rows, size_t cols) {
  for (size_t i = 0; i < rows; ++i) {
    double mu = 0.0;
    for (size_t j = 0; j < cols; ++j) mu += x[i * cols + j];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (size_t j = 0; j < cols; ++j) {
      const double dev = x[i * cols + j] - mu;
      var += dev * dev;
    }
    var /= static_cast<double>(cols);
    for (size_t j = 0; j < cols; ++j) {
      y[i * cols + j] =
          (x[i * cols + j] - mu) / std::sqrt(var + 1e-5) * gamma[j] + beta[j];
    }
  }
}

void CausalAttention(In q, In k, In v, Out out, size_t tq, size_t tk, size_t d,
                     size_t heads, size_t q_offset) {
  const size_t hd = d / heads;
  for (size_t h = 0; h < heads; ++h) {
    for (size_t i = 0; i < tq; ++i) {
      std::vector<double> scores;
      for (size_t j = 0; j < tk && j <= q_offset + i; ++j) {
        double s = 0.0;
        for (size_t c = 0; c < hd; ++c) {
          s += q[i * d + h * hd + c] * k[j * d + h * hd + c];
        }
        scores.push_back(s / std::sqrt(static_cast<double>(hd)));
      }
      double total = 0.0;
      for (double s : scores) total += std::exp(s);
      for (size_t c = 0; c < hd; ++c) {
        double acc = 0.0;
        for (size_t j = 0; j < scores.size(); ++j) {
          acc += std::exp(scores[j]) / total * v[j * d + h * hd + c];
        }
        out[i * d + h * hd + c] = acc;
      }
    }
  }
}

void LogSoftmax(In logits, Out out, size_t rows, size_t cols) {
  for (size_t i = 0; i < rows; ++i) {
    double total = 0.0;
    for (size_t j = 0; j < cols; ++j) total += std::exp(logits[i * cols + j]);
    for (size_t j = 0; j < cols; ++j) {
      out[i * cols + j] = logits[i * cols + j] - std::log(total);
    }
  }
}

}  // namespace gemel::kernels::reference
