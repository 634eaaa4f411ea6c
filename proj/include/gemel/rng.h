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

#ifndef GEMEL_RNG_H_
#define GEMEL_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace gemel {

// Platform-reproducible random source: std::mt19937_64 with locally
// implemented distributions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Seed for a named sub-stream, so components draw independently of each
  // other from one top-level seed.
  static uint64_t DeriveSeed(uint64_t seed, std::string_view stream);
  static Rng Stream(uint64_t seed, std::string_view stream) {
    return Rng(DeriveSeed(seed, stream));
  }

  uint64_t NextU64() { return engine_(); }
  // Uniform in [0, n); n > 0.
  uint64_t UniformInt(uint64_t n);
  // Uniform in [0, 1) with 53 random bits.
  double Uniform01();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }
  double Normal(double mean = 0.0, double stddev = 1.0);

  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[UniformInt(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0;
};

}  // namespace gemel

#endif  // GEMEL_RNG_H_
