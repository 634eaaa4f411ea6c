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

#ifndef GEMEL_VISION_H_
#define GEMEL_VISION_H_

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gemel/tensor.h"

namespace gemel {

// Frozen, read-only provider of image feature vectors keyed by image_ref.
class VisionFeatureStore {
 public:
  enum class Mode { kRows, kSyntheticHash };

  VisionFeatureStore() = default;
  // Explicit rows; every vector must have length d_v and refs must be unique.
  VisionFeatureStore(size_t d_v, std::vector<std::string> refs,
                     std::vector<std::vector<double>> rows);
  // Deterministic pseudo-features in [-1, 1] derived from the ref string.
  static VisionFeatureStore SyntheticHash(size_t d_v);

  size_t dim() const { return d_v_; }
  Mode mode() const { return mode_; }
  size_t row_count() const { return refs_.size(); }
  const std::vector<std::string>& refs() const { return refs_; }
  bool Contains(const std::string& ref) const;
  // Throws ValidationError for an unknown ref.
  std::vector<double> Feature(const std::string& ref) const;

  // Copy with one more explicit row; in hash mode the row shadows the hash.
  VisionFeatureStore WithRow(const std::string& ref, std::span<const double> row) const;

  // "GMFV": magic, u32 version, u32 dim, u64 rows, (rows + 1) u64 offsets
  // into the ref-string blob, the blob, then float32 rows. Only kRows stores
  // can be written.
  std::string Serialize() const;
  static VisionFeatureStore Deserialize(std::string_view bytes);
  void Save(const std::string& path) const;
  static VisionFeatureStore Load(const std::string& path);

  // CRC32 identifying the provider contents; hash mode hashes its dimension.
  uint32_t Fingerprint() const;

 private:
  Mode mode_ = Mode::kRows;
  size_t d_v_ = 0;
  std::vector<std::string> refs_;
  std::vector<float> values_;  // row-major, stored as float32 like the file
  std::unordered_map<std::string, size_t> index_;
};

// Trainable linear map from a d_v feature to k embeddings of width d_t.
struct FeatureMapper {
  size_t d_v = 0;
  size_t prefix_len = 4;  // k
  size_t d_t = 0;
  Tensor weight;          // [d_v, k * d_t]

  FeatureMapper() = default;
  FeatureMapper(size_t d_v, size_t prefix_len, size_t d_t);

  // feat^T W reshaped row-major into [k, d_t]. Throws ValidationError on a
  // dimension mismatch.
  Tensor Map(std::span<const double> feature) const;
};

}  // namespace gemel

#endif  // GEMEL_VISION_H_
