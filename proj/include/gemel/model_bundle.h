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

#ifndef GEMEL_MODEL_BUNDLE_H_
#define GEMEL_MODEL_BUNDLE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gemel/autodiff.h"
#include "gemel/prompt.h"
#include "gemel/tensor.h"
#include "gemel/tokenizer.h"
#include "gemel/toy_lm.h"
#include "gemel/vision.h"
#include "json.hpp"

namespace gemel {

struct ModelConfig {
  size_t d_v = 32;
  size_t prefix_len = 4;  // k
  LmConfig lm;            // vocab_size is filled from the vocabulary
  DType dtype = DType::kF64;
  bool zero_init_mapper = true;

  nlohmann::json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& j);
};

// Named tensors plus metadata. "GMCK" layout: magic, u32 version, u64
// manifest length, JSON manifest (tensor name, shape, dtype, byte offset,
// byte length, plus metadata), raw little-endian payloads, trailing CRC32.
struct Checkpoint {
  struct Entry {
    std::string name;
    DType dtype = DType::kF64;
    Tensor tensor;
  };
  std::vector<Entry> tensors;
  uint32_t vocab_hash = 0;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json meta = nlohmann::json::object();

  const Entry* Find(const std::string& name) const;
  void Put(std::string name, DType dtype, const Tensor& tensor);
  // Little-endian payload bytes of one tensor as stored on disk.
  static std::string EncodePayload(const Entry& entry);

  std::string Serialize() const;
  static Checkpoint Deserialize(std::string_view bytes);
  void Save(const std::string& path) const;
  static Checkpoint Load(const std::string& path);
};

// Frozen LM and vision provider, trainable mapper, and the vocabulary they
// were built against.
struct ModelBundle {
  ModelConfig config;
  Vocabulary vocab;
  ToyLM lm;
  FeatureMapper mapper;
  std::shared_ptr<const VisionFeatureStore> features;

  static ModelBundle Initialize(const ModelConfig& config, Vocabulary vocab,
                                std::shared_ptr<const VisionFeatureStore> features,
                                uint64_t seed);

  // Prompt -> input embeddings [length, d_t]: token embeddings for token
  // spans, mapped features for visual prefixes, plus positional embeddings.
  // Throws ValidationError for an unknown image_ref or a prompt longer than
  // max_len.
  Tensor EmbedSequence(const PromptSequence& prompt) const;
  // Same on a tape, with gradients flowing into the mapper when it is
  // trainable. `extra_tokens` are appended after the prompt (teacher
  // forcing).
  Var EmbedSequenceOnTape(Tape& tape, const PromptSequence& prompt,
                          std::span<const TokenId> extra_tokens = {});

  // Rounds every parameter to float32 when config.dtype is f32.
  void ApplyStoragePrecision();

  Checkpoint ToCheckpoint(const nlohmann::json& run_config) const;
  // Throws ValidationError when the vocabulary hash, the feature provider
  // fingerprint, or a tensor shape does not match.
  static ModelBundle FromCheckpoint(const Checkpoint& ckpt, Vocabulary vocab,
                                    std::shared_ptr<const VisionFeatureStore> features);
};

}  // namespace gemel

#endif  // GEMEL_MODEL_BUNDLE_H_
