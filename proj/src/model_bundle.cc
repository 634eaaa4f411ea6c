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

#include "gemel/model_bundle.h"

#include <bit>
#include <cmath>

#include "gemel/binary_io.h"
#include "gemel/errors.h"

namespace gemel {

using json = nlohmann::json;

namespace {

constexpr char kMagic[] = "GMCK";
constexpr uint32_t kVersion = 1;

void Quantize(Tensor& t) {
  for (double& v : t.data) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace

json ModelConfig::ToJson() const {
  return {{"d_v", d_v},
          {"k", prefix_len},
          {"d_t", lm.d_model},
          {"layers", lm.layers},
          {"heads", lm.heads},
          {"max_len", lm.max_len},
          {"init_std", lm.init_std},
          {"dtype", DTypeName(dtype)},
          {"zero_init_mapper", zero_init_mapper}};
}

ModelConfig ModelConfig::FromJson(const json& j) {
  ModelConfig c;
  c.d_v = j.value("d_v", c.d_v);
  c.prefix_len = j.value("k", c.prefix_len);
  c.lm.d_model = j.value("d_t", c.lm.d_model);
  c.lm.layers = j.value("layers", c.lm.layers);
  c.lm.heads = j.value("heads", c.lm.heads);
  c.lm.max_len = j.value("max_len", c.lm.max_len);
  c.lm.init_std = j.value("init_std", c.lm.init_std);
  c.dtype = ParseDType(j.value("dtype", std::string(DTypeName(c.dtype))));
  c.zero_init_mapper = j.value("zero_init_mapper", c.zero_init_mapper);
  return c;
}

const Checkpoint::Entry* Checkpoint::Find(const std::string& name) const {
  for (const Entry& e : tensors) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

void Checkpoint::Put(std::string name, DType dtype, const Tensor& tensor) {
  Entry e{std::move(name), dtype, Tensor(tensor.shape, tensor.data)};
  for (Entry& existing : tensors) {
    if (existing.name == e.name) {
      existing = std::move(e);
      return;
    }
  }
  tensors.push_back(std::move(e));
}

std::string Checkpoint::EncodePayload(const Entry& entry) {
  ByteWriter w;
  for (double v : entry.tensor.data) {
    if (entry.dtype == DType::kF32) {
      w.PutF32(static_cast<float>(v));
    } else {
      w.PutF64(v);
    }
  }
  return w.buffer();
}

std::string Checkpoint::Serialize() const {
  json manifest;
  manifest["vocab_hash"] = vocab_hash;
  manifest["config"] = config;
  manifest["meta"] = meta;
  manifest["tensors"] = json::array();
  std::string payload;
  for (const Entry& e : tensors) {
    std::string bytes = EncodePayload(e);
    manifest["tensors"].push_back({{"name", e.name},
                                   {"shape", e.tensor.shape},
                                   {"dtype", DTypeName(e.dtype)},
                                   {"offset", payload.size()},
                                   {"bytes", bytes.size()}});
    payload += bytes;
  }
  const std::string manifest_text = manifest.dump();
  ByteWriter w;
  w.PutBytes(std::string_view(kMagic, 4));
  w.PutU32(kVersion);
  w.PutU64(manifest_text.size());
  w.PutBytes(manifest_text);
  w.PutBytes(payload);
  w.PutCrc32();
  return w.buffer();
}

Checkpoint Checkpoint::Deserialize(std::string_view bytes) {
  if (bytes.size() < 8 || bytes.substr(0, 4) != std::string_view(kMagic, 4)) {
    throw ValidationError("checkpoint: bad magic");
  }
  {
    ByteReader header(bytes.substr(4, 4));
    if (uint32_t version = header.GetU32(); version != kVersion) {
      throw ValidationError("checkpoint: unsupported version " + std::to_string(version));
    }
  }
  std::string_view body = VerifyTrailingCrc32(bytes, "checkpoint");
  ByteReader r(body);
  r.Seek(8);
  const uint64_t manifest_len = r.GetU64();
  json manifest;
  try {
    manifest = json::parse(r.GetBytes(manifest_len));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint manifest: ") + e.what());
  }
  const size_t payload_start = r.position();
  Checkpoint ckpt;
  ckpt.vocab_hash = manifest.at("vocab_hash").get<uint32_t>();
  ckpt.config = manifest.at("config");
  ckpt.meta = manifest.at("meta");
  for (const json& t : manifest.at("tensors")) {
    Entry e;
    e.name = t.at("name").get<std::string>();
    e.dtype = ParseDType(t.at("dtype").get<std::string>());
    auto shape = t.at("shape").get<std::vector<size_t>>();
    const size_t offset = t.at("offset").get<size_t>();
    const size_t count = Tensor::NumElements(shape);
    const size_t width = e.dtype == DType::kF32 ? 4 : 8;
    if (t.at("bytes").get<size_t>() != count * width) {
      throw ValidationError("checkpoint: tensor " + e.name + " has inconsistent size");
    }
    r.Seek(payload_start + offset);
    std::vector<double> values(count);
    for (double& v : values) v = e.dtype == DType::kF32 ? r.GetF32() : r.GetF64();
    e.tensor = Tensor(std::move(shape), std::move(values));
    ckpt.tensors.push_back(std::move(e));
  }
  return ckpt;
}

void Checkpoint::Save(const std::string& path) const { WriteFileBytes(path, Serialize()); }

Checkpoint Checkpoint::Load(const std::string& path) {
  return Deserialize(ReadFileBytes(path));
}

ModelBundle ModelBundle::Initialize(const ModelConfig& config, Vocabulary vocab,
                                    std::shared_ptr<const VisionFeatureStore> features,
                                    uint64_t seed) {
  if (!features) throw ValidationError("model needs a vision feature provider");
  if (features->dim() != config.d_v) {
    throw ValidationError("feature provider dimension " + std::to_string(features->dim()) +
                          " != configured d_v " + std::to_string(config.d_v));
  }
  ModelBundle bundle;
  bundle.config = config;
  bundle.config.lm.vocab_size = vocab.size();
  bundle.vocab = std::move(vocab);
  Rng lm_rng = Rng::Stream(seed, "init/lm");
  bundle.lm = ToyLM::Initialize(bundle.config.lm, lm_rng);
  bundle.mapper = FeatureMapper(config.d_v, config.prefix_len, config.lm.d_model);
  if (!config.zero_init_mapper) {
    Rng mapper_rng = Rng::Stream(seed, "init/mapper");
    for (double& v : bundle.mapper.weight.data) v = mapper_rng.Normal(0.0, config.lm.init_std);
  }
  bundle.features = std::move(features);
  bundle.ApplyStoragePrecision();
  return bundle;
}

Tensor ModelBundle::EmbedSequence(const PromptSequence& prompt) const {
  const size_t d = config.lm.d_model;
  const size_t length = prompt.Length();
  if (length > config.lm.max_len) {
    throw ValidationError("prompt of length " + std::to_string(length) +
                          " exceeds max_len " + std::to_string(config.lm.max_len));
  }
  Tensor out({length, d});
  size_t pos = 0;
  for (const PromptSegment& seg : prompt.segments) {
    if (const auto* visual = std::get_if<VisualPrefix>(&seg)) {
      if (visual->slots != mapper.prefix_len) {
        throw ValidationError("visual prefix length does not match the mapper");
      }
      Tensor mapped = mapper.Map(features->Feature(visual->image_ref));
      const Tensor& positions = lm.position_embedding();
      for (size_t i = 0; i < visual->slots; ++i) {
        for (size_t c = 0; c < d; ++c) {
          out.data[(pos + i) * d + c] =
              mapped.data[i * d + c] + positions.data[(pos + i) * d + c];
        }
      }
      pos += visual->slots;
    } else {
      const TokenSeq& ids = std::get<TokenSpan>(seg).ids;
      Tensor tokens = lm.EmbedTokens(ids, pos);
      std::copy(tokens.data.begin(), tokens.data.end(), out.data.begin() + pos * d);
      pos += ids.size();
    }
  }
  return out;
}

Var ModelBundle::EmbedSequenceOnTape(Tape& tape, const PromptSequence& prompt,
                                     std::span<const TokenId> extra_tokens) {
  const size_t total = prompt.Length() + extra_tokens.size();
  if (total > config.lm.max_len) {
    throw ValidationError("sequence of length " + std::to_string(total) +
                          " exceeds max_len " + std::to_string(config.lm.max_len));
  }
  std::vector<Var> parts;
  size_t pos = 0;
  Var weight = tape.Watch(mapper.weight);
  for (const PromptSegment& seg : prompt.segments) {
    if (const auto* visual = std::get_if<VisualPrefix>(&seg)) {
      if (visual->slots != mapper.prefix_len) {
        throw ValidationError("visual prefix length does not match the mapper");
      }
      std::vector<double> feature = features->Feature(visual->image_ref);
      if (feature.size() != mapper.d_v) throw ValidationError("feature dimension mismatch");
      Var feat = tape.Constant(Tensor({1, mapper.d_v}, std::move(feature)));
      Var flat = ad::MatMul(tape, feat, weight);
      Var mapped = ad::Reshape(tape, flat, {mapper.prefix_len, mapper.d_t});
      parts.push_back(ad::Add(tape, mapped, lm.PositionsOnTape(tape, pos, visual->slots)));
      pos += visual->slots;
    } else {
      const TokenSeq& ids = std::get<TokenSpan>(seg).ids;
      if (ids.empty()) continue;
      parts.push_back(lm.EmbedTokensOnTape(tape, ids, pos));
      pos += ids.size();
    }
  }
  if (!extra_tokens.empty()) parts.push_back(lm.EmbedTokensOnTape(tape, extra_tokens, pos));
  return ad::ConcatRows(tape, parts);
}

void ModelBundle::ApplyStoragePrecision() {
  if (config.dtype != DType::kF32) return;
  for (auto& [name, t] : lm.NamedParameters()) Quantize(*t);
  Quantize(mapper.weight);
}

Checkpoint ModelBundle::ToCheckpoint(const json& run_config) const {
  Checkpoint ckpt;
  ckpt.vocab_hash = vocab.Hash();
  ckpt.config = run_config;
  ckpt.meta["model"] = config.ToJson();
  ckpt.meta["features"] = {
      {"mode", features->mode() == VisionFeatureStore::Mode::kRows ? "rows" : "synthetic-hash"},
      {"d_v", features->dim()},
      {"fingerprint", features->Fingerprint()}};
  for (const auto& [name, t] : lm.NamedParameters()) ckpt.Put(name, config.dtype, *t);
  ckpt.Put("mapper.weight", config.dtype, mapper.weight);
  return ckpt;
}

ModelBundle ModelBundle::FromCheckpoint(const Checkpoint& ckpt, Vocabulary vocab,
                                        std::shared_ptr<const VisionFeatureStore> features) {
  if (ckpt.vocab_hash != vocab.Hash()) {
    throw ValidationError("checkpoint was built against a different vocabulary");
  }
  if (!features) throw ValidationError("model needs a vision feature provider");
  const json& fmeta = ckpt.meta.at("features");
  if (fmeta.at("fingerprint").get<uint32_t>() != features->Fingerprint()) {
    throw ValidationError("vision features differ from the ones the checkpoint was built with");
  }
  ModelConfig config = ModelConfig::FromJson(ckpt.meta.at("model"));
  ModelBundle bundle = Initialize(config, std::move(vocab), std::move(features), 0);
  auto restore = [&](const std::string& name, Tensor& dst) {
    const Checkpoint::Entry* e = ckpt.Find(name);
    if (e == nullptr) throw ValidationError("checkpoint lacks tensor " + name);
    if (e->tensor.shape != dst.shape) {
      throw ValidationError("checkpoint tensor " + name + " has the wrong shape");
    }
    dst.data = e->tensor.data;
  };
  for (auto& [name, t] : bundle.lm.NamedParameters()) restore(name, *t);
  restore("mapper.weight", bundle.mapper.weight);
  return bundle;
}

}  // namespace gemel
