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

#include "gemel/kernels.h"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace gemel::kernels {
namespace {

// Below this many multiply-adds the fork/join costs more than it saves.
constexpr size_t kParallelWork = 1 << 15;

}  // namespace

void MatMul(In a, In b, Out c, size_t m, size_t k, size_t n, bool accumulate) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double* ci = c.data() + i * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    const double* ai = a.data() + i * k;
    for (size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b.data() + p * n;
      for (size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void MatMulNT(In a, In b, Out c, size_t m, size_t k, size_t n, bool accumulate) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const double* ai = a.data() + i * k;
    double* ci = c.data() + i * n;
    for (size_t j = 0; j < n; ++j) {
      const double* bj = b.data() + j * k;
      double sum = 0.0;
      for (size_t p = 0; p < k; ++p) sum += ai[p] * bj[p];
      ci[j] = accumulate ? ci[j] + sum : sum;
    }
  }
}

void MatMulTNAccumulate(In a, In b, Out c, size_t m, size_t k, size_t n) {
  const auto out_rows = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (std::ptrdiff_t p = 0; p < out_rows; ++p) {
    double* cp = c.data() + p * n;
    for (size_t i = 0; i < m; ++i) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const double* bi = b.data() + i * n;
      for (size_t j = 0; j < n; ++j) cp[j] += aip * bi[j];
    }
  }
}

void AddRowBias(Out y, In bias, size_t rows, size_t cols) {
  for (size_t i = 0; i < rows; ++i) {
    double* yi = y.data() + i * cols;
    for (size_t j = 0; j < cols; ++j) yi[j] += bias[j];
  }
}

void LayerNorm(In x, In gamma, In beta, Out y, Out mean, Out rstd, size_t rows,
               size_t cols) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols > kParallelWork)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double* xi = x.data() + i * cols;
    double mu = 0.0;
    for (size_t j = 0; j < cols; ++j) mu += xi[j];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (size_t j = 0; j < cols; ++j) var += (xi[j] - mu) * (xi[j] - mu);
    var /= static_cast<double>(cols);
    const double rs = 1.0 / std::sqrt(var + kLayerNormEps);
    double* yi = y.data() + i * cols;
    for (size_t j = 0; j < cols; ++j) {
      yi[j] = (xi[j] - mu) * rs * gamma[j] + beta[j];
    }
    if (!mean.empty()) mean[i] = mu;
    if (!rstd.empty()) rstd[i] = rs;
  }
}

void LayerNormBackward(In x, In gamma, In mean, In rstd, In dy, Out dx, Out dgamma,
                       Out dbeta, size_t rows, size_t cols) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
  const double inv_cols = 1.0 / static_cast<double>(cols);
  if (!dx.empty()) {
#pragma omp parallel for schedule(static) if (rows * cols > kParallelWork)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const double* xi = x.data() + i * cols;
      const double* dyi = dy.data() + i * cols;
      double sum_dxhat = 0.0;
      double sum_dxhat_xhat = 0.0;
      for (size_t j = 0; j < cols; ++j) {
        const double xhat = (xi[j] - mean[i]) * rstd[i];
        const double dxhat = dyi[j] * gamma[j];
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * xhat;
      }
      double* dxi = dx.data() + i * cols;
      for (size_t j = 0; j < cols; ++j) {
        const double xhat = (xi[j] - mean[i]) * rstd[i];
        const double dxhat = dyi[j] * gamma[j];
        dxi[j] += rstd[i] * (dxhat - sum_dxhat * inv_cols -
                             xhat * sum_dxhat_xhat * inv_cols);
      }
    }
  }
  if (!dgamma.empty() || !dbeta.empty()) {
    for (size_t i = 0; i < rows; ++i) {
      const double* xi = x.data() + i * cols;
      const double* dyi = dy.data() + i * cols;
      for (size_t j = 0; j < cols; ++j) {
        if (!dgamma.empty()) dgamma[j] += dyi[j] * (xi[j] - mean[i]) * rstd[i];
        if (!dbeta.empty()) dbeta[j] += dyi[j];
      }
    }
  }
}

void Gelu(In x, Out y) {
  for (size_t i = 0; i < x.size(); ++i) {
    y[i] = 0.5 * x[i] * (1.0 + std::erf(x[i] * std::numbers::sqrt2 / 2.0));
  }
}

void GeluBackward(In x, In dy, Out dx) {
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (size_t i = 0; i < x.size(); ++i) {
    const double cdf = 0.5 * (1.0 + std::erf(x[i] * std::numbers::sqrt2 / 2.0));
    const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x[i] * x[i]);
    dx[i] += dy[i] * (cdf + x[i] * pdf);
  }
}

void CausalAttention(In q, In k, In v, Out out, Out probs, size_t tq, size_t tk,
                     size_t d, size_t heads, size_t q_offset) {
  const size_t hd = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const auto work = static_cast<std::ptrdiff_t>(heads * tq);
#pragma omp parallel if (tq * tk * d > kParallelWork)
  {
    std::vector<double> weights(tk);
#pragma omp for schedule(static)
    for (std::ptrdiff_t w = 0; w < work; ++w) {
      const size_t h = static_cast<size_t>(w) / tq;
      const size_t i = static_cast<size_t>(w) % tq;
      const size_t last = std::min(q_offset + i, tk - 1);
      const double* qi = q.data() + i * d + h * hd;
      double max_score = -std::numeric_limits<double>::infinity();
      for (size_t j = 0; j <= last; ++j) {
        const double* kj = k.data() + j * d + h * hd;
        double s = 0.0;
        for (size_t c = 0; c < hd; ++c) s += qi[c] * kj[c];
        weights[j] = s * scale;
        max_score = std::max(max_score, weights[j]);
      }
      double total = 0.0;
      for (size_t j = 0; j <= last; ++j) {
        weights[j] = std::exp(weights[j] - max_score);
        total += weights[j];
      }
      double* oi = out.data() + i * d + h * hd;
      std::fill(oi, oi + hd, 0.0);
      for (size_t j = 0; j <= last; ++j) {
        weights[j] /= total;
        const double* vj = v.data() + j * d + h * hd;
        for (size_t c = 0; c < hd; ++c) oi[c] += weights[j] * vj[c];
      }
      if (!probs.empty()) {
        double* pi = probs.data() + (h * tq + i) * tk;
        std::fill(pi, pi + tk, 0.0);
        std::copy(weights.begin(), weights.begin() + last + 1, pi);
      }
    }
  }
}

void CausalAttentionBackward(In q, In k, In v, In probs, In dout, Out dq, Out dk,
                             Out dv, size_t t, size_t d, size_t heads) {
  const size_t hd = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const auto nh = static_cast<std::ptrdiff_t>(heads);
  // One head per task; heads write disjoint column blocks.
#pragma omp parallel if (t * t * d > kParallelWork)
  {
    std::vector<double> dp(t);
#pragma omp for schedule(static)
    for (std::ptrdiff_t hh = 0; hh < nh; ++hh) {
      const auto h = static_cast<size_t>(hh);
      for (size_t i = 0; i < t; ++i) {
        const double* pi = probs.data() + (h * t + i) * t;
        const double* doi = dout.data() + i * d + h * hd;
        double dot = 0.0;
        for (size_t j = 0; j <= i; ++j) {
          const double* vj = v.data() + j * d + h * hd;
          double s = 0.0;
          for (size_t c = 0; c < hd; ++c) s += doi[c] * vj[c];
          dp[j] = s;
          dot += pi[j] * s;
          if (!dv.empty()) {
            double* dvj = dv.data() + j * d + h * hd;
            for (size_t c = 0; c < hd; ++c) dvj[c] += pi[j] * doi[c];
          }
        }
        const double* qi = q.data() + i * d + h * hd;
        double* dqi = dq.empty() ? nullptr : dq.data() + i * d + h * hd;
        for (size_t j = 0; j <= i; ++j) {
          const double ds = pi[j] * (dp[j] - dot) * scale;
          if (ds == 0.0) continue;
          const double* kj = k.data() + j * d + h * hd;
          if (dqi != nullptr) {
            for (size_t c = 0; c < hd; ++c) dqi[c] += ds * kj[c];
          }
          if (!dk.empty()) {
            double* dkj = dk.data() + j * d + h * hd;
            for (size_t c = 0; c < hd; ++c) dkj[c] += ds * qi[c];
          }
        }
      }
    }
  }
}

void LogSoftmax(In logits, Out out, size_t rows, size_t cols) {
  for (size_t i = 0; i < rows; ++i) {
    const double* li = logits.data() + i * cols;
    double* oi = out.data() + i * cols;
    double max_logit = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < cols; ++j) max_logit = std::max(max_logit, li[j]);
    double total = 0.0;
    for (size_t j = 0; j < cols; ++j) total += std::exp(li[j] - max_logit);
    const double log_total = max_logit + std::log(total);
    for (size_t j = 0; j < cols; ++j) oi[j] = li[j] - log_total;
  }
}

}  // namespace gemel::kernels
