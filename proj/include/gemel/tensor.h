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

#ifndef GEMEL_TENSOR_H_
#define GEMEL_TENSOR_H_

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gemel {

// Storage precision used when a tensor is written to a checkpoint. Arithmetic
// always runs in double.
enum class DType { kF32, kF64 };

inline const char* DTypeName(DType dtype) {
  return dtype == DType::kF32 ? "f32" : "f64";
}
inline DType ParseDType(const std::string& name) {
  if (name == "f32") return DType::kF32;
  if (name == "f64") return DType::kF64;
  throw std::invalid_argument("unknown dtype " + name);
}

// Dense row-major tensor. `grad`, when allocated, has the same length as
// `data`.
struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(std::vector<size_t> dims, double fill = 0.0)
      : shape(std::move(dims)), data(NumElements(shape), fill) {}
  Tensor(std::vector<size_t> dims, std::vector<double> values)
      : shape(std::move(dims)), data(std::move(values)) {
    if (data.size() != NumElements(shape)) {
      throw std::invalid_argument("tensor data does not match its shape");
    }
  }

  static size_t NumElements(const std::vector<size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), size_t{1},
                           std::multiplies<>());
  }

  size_t numel() const { return data.size(); }
  // A 1-D tensor is a single row; higher ranks flatten trailing dimensions.
  size_t rows() const { return shape.size() <= 1 ? 1 : shape[0]; }
  size_t cols() const { return rows() == 0 ? 0 : numel() / rows(); }

  std::span<double> row(size_t r) { return {data.data() + r * cols(), cols()}; }
  std::span<const double> row(size_t r) const {
    return {data.data() + r * cols(), cols()};
  }

  // Allocates (if needed) and zeroes the gradient buffer.
  void ZeroGrad() { grad.assign(data.size(), 0.0); }
  bool has_grad() const { return grad.size() == data.size() && !data.empty(); }
};

}  // namespace gemel

#endif  // GEMEL_TENSOR_H_
