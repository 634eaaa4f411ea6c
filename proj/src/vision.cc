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

#include "gemel/vision.h"

#include "gemel/binary_io.h"
#include "gemel/errors.h"
#include "gemel/kernels.h"
#include "gemel/rng.h"

namespace gemel {
namespace {

constexpr char kMagic[] = "GMFV";
constexpr uint32_t kVersion = 1;

}  // namespace

VisionFeatureStore::VisionFeatureStore(size_t d_v, std::vector<std::string> refs,
                                       std::vector<std::vector<double>> rows)
    : mode_(Mode::kRows), d_v_(d_v), refs_(std::move(refs)) {
  if (refs_.size() != rows.size()) {
    throw ValidationError("feature store: ref and row counts differ");
  }
  values_.reserve(refs_.size() * d_v_);
  for (size_t i = 0; i < refs_.size(); ++i) {
    if (rows[i].size() != d_v_) {
      throw ValidationError("feature row for " + refs_[i] + " has wrong dimension");
    }
    if (!index_.emplace(refs_[i], i).second) {
      throw ValidationError("duplicate image_ref " + refs_[i]);
    }
    for (double v : rows[i]) values_.push_back(static_cast<float>(v));
  }
}

VisionFeatureStore VisionFeatureStore::SyntheticHash(size_t d_v) {
  VisionFeatureStore store;
  store.mode_ = Mode::kSyntheticHash;
  store.d_v_ = d_v;
  return store;
}

bool VisionFeatureStore::Contains(const std::string& ref) const {
  return mode_ == Mode::kSyntheticHash || index_.count(ref) != 0;
}

std::vector<double> VisionFeatureStore::Feature(const std::string& ref) const {
  std::vector<double> out(d_v_);
  if (mode_ == Mode::kSyntheticHash && index_.count(ref) == 0) {
    Rng rng = Rng::Stream(0, "image:" + ref);
    for (double& v : out) v = rng.Uniform(-1.0, 1.0);
    return out;
  }
  auto it = index_.find(ref);
  if (it == index_.end()) throw ValidationError("unknown image_ref " + ref);
  for (size_t j = 0; j < d_v_; ++j) out[j] = values_[it->second * d_v_ + j];
  return out;
}

std::string VisionFeatureStore::Serialize() const {
  if (mode_ != Mode::kRows) {
    throw ValidationError("synthetic-hash feature stores have no file form");
  }
  ByteWriter w;
  w.PutBytes(std::string_view(kMagic, 4));
  w.PutU32(kVersion);
  w.PutU32(static_cast<uint32_t>(d_v_));
  w.PutU64(refs_.size());
  uint64_t offset = 0;
  w.PutU64(offset);
  for (const std::string& ref : refs_) {
    offset += ref.size();
    w.PutU64(offset);
  }
  for (const std::string& ref : refs_) w.PutBytes(ref);
  for (float v : values_) w.PutF32(v);
  return w.buffer();
}

VisionFeatureStore VisionFeatureStore::Deserialize(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != std::string_view(kMagic, 4)) {
    throw ValidationError("feature file: bad magic");
  }
  ByteReader r(bytes);
  r.Seek(4);
  if (uint32_t version = r.GetU32(); version != kVersion) {
    throw ValidationError("feature file: unsupported version " + std::to_string(version));
  }
  const uint32_t dim = r.GetU32();
  const uint64_t rows = r.GetU64();
  if (rows > bytes.size()) throw ValidationError("feature file: implausible row count");
  std::vector<uint64_t> offsets(rows + 1);
  for (uint64_t& o : offsets) o = r.GetU64();
  if (offsets[0] != 0) throw ValidationError("feature file: bad offset table");
  std::string_view blob = r.GetBytes(offsets.back());
  std::vector<std::string> refs;
  refs.reserve(rows);
  for (uint64_t i = 0; i < rows; ++i) {
    if (offsets[i + 1] < offsets[i]) throw ValidationError("feature file: bad offset table");
    refs.emplace_back(blob.substr(offsets[i], offsets[i + 1] - offsets[i]));
  }
  std::vector<std::vector<double>> values(rows, std::vector<double>(dim));
  for (auto& row : values) {
    for (double& v : row) v = r.GetF32();
  }
  if (r.remaining() != 0) throw ValidationError("feature file: trailing bytes");
  return VisionFeatureStore(dim, std::move(refs), std::move(values));
}

void VisionFeatureStore::Save(const std::string& path) const {
  WriteFileBytes(path, Serialize());
}

VisionFeatureStore VisionFeatureStore::Load(const std::string& path) {
  return Deserialize(ReadFileBytes(path));
}

VisionFeatureStore VisionFeatureStore::WithRow(const std::string& ref,
                                              std::span<const double> row) const {
  if (row.size() != d_v_) throw ValidationError("feature row has the wrong dimension");
  if (index_.count(ref) != 0) throw ValidationError("duplicate image_ref " + ref);
  VisionFeatureStore out = *this;
  out.index_.emplace(ref, out.refs_.size());
  out.refs_.push_back(ref);
  for (double v : row) out.values_.push_back(static_cast<float>(v));
  return out;
}

uint32_t VisionFeatureStore::Fingerprint() const {
  if (mode_ == Mode::kSyntheticHash) {
    std::string tag = "synthetic-hash:" + std::to_string(d_v_);
    return Crc32(std::as_bytes(std::span(tag)));
  }
  std::string bytes = Serialize();
  return Crc32(std::as_bytes(std::span(bytes)));
}

FeatureMapper::FeatureMapper(size_t d_v, size_t prefix_len, size_t d_t)
    : d_v(d_v), prefix_len(prefix_len), d_t(d_t), weight({d_v, prefix_len * d_t}) {}

Tensor FeatureMapper::Map(std::span<const double> feature) const {
  if (feature.size() != d_v) {
    throw ValidationError("feature has dimension " + std::to_string(feature.size()) +
                          ", mapper expects " + std::to_string(d_v));
  }
  Tensor flat({1, prefix_len * d_t});
  kernels::MatMul(feature, weight.data, flat.data, 1, d_v, prefix_len * d_t);
  return Tensor({prefix_len, d_t}, std::move(flat.data));
}

}  // namespace gemel
