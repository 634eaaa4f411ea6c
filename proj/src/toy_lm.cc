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

#include "gemel/toy_lm.h"

#include <algorithm>

#include "gemel/errors.h"
#include "gemel/kernels.h"

namespace gemel {
namespace {

Tensor RandomNormal(std::vector<size_t> shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.Normal(0.0, stddev);
  return t;
}

// y = x * w + b for x [rows, in], w [in, out].
Tensor Affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  const size_t rows = x.rows(), in = x.cols(), out = w.cols();
  Tensor y({rows, out});
  kernels::MatMul(x.data, w.data, y.data, rows, in, out);
  kernels::AddRowBias(y.data, b.data, rows, out);
  return y;
}

Tensor Norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  Tensor y(x.shape);
  kernels::LayerNorm(x.data, gain.data, bias.data, y.data, {}, {}, x.rows(), x.cols());
  return y;
}

Tensor AppendRows(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows() + b.rows(), b.cols()});
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.numel());
  return out;
}

}  // namespace

ToyLM ToyLM::Initialize(const LmConfig& config, Rng& rng) {
  if (config.vocab_size == 0 || config.d_model == 0 || config.heads == 0 ||
      config.d_model % config.heads != 0 || config.max_len == 0) {
    throw ValidationError("invalid language model configuration");
  }
  const size_t d = config.d_model, ff = 4 * config.d_model;
  const double s = config.init_std;
  ToyLM lm;
  lm.config_ = config;
  lm.token_embedding_ = RandomNormal({config.vocab_size, d}, s, rng);
  lm.position_embedding_ = RandomNormal({config.max_len, d}, s, rng);
  for (size_t l = 0; l < config.layers; ++l) {
    DecoderBlock b;
    b.ln1_gain = Tensor({d}, 1.0);
    b.ln1_bias = Tensor({d});
    b.wq = RandomNormal({d, d}, s, rng);
    b.bq = Tensor({d});
    b.wk = RandomNormal({d, d}, s, rng);
    b.bk = Tensor({d});
    b.wv = RandomNormal({d, d}, s, rng);
    b.bv = Tensor({d});
    b.wo = RandomNormal({d, d}, s, rng);
    b.bo = Tensor({d});
    b.ln2_gain = Tensor({d}, 1.0);
    b.ln2_bias = Tensor({d});
    b.w_in = RandomNormal({d, ff}, s, rng);
    b.b_in = Tensor({ff});
    b.w_out = RandomNormal({ff, d}, s, rng);
    b.b_out = Tensor({d});
    lm.blocks_.push_back(std::move(b));
  }
  lm.final_gain_ = Tensor({d}, 1.0);
  lm.final_bias_ = Tensor({d});
  return lm;
}

std::vector<std::pair<std::string, Tensor*>> ToyLM::NamedParameters() {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back("lm.token_embedding", &token_embedding_);
  out.emplace_back("lm.position_embedding", &position_embedding_);
  for (size_t l = 0; l < blocks_.size(); ++l) {
    DecoderBlock& b = blocks_[l];
    const std::string p = "lm.block" + std::to_string(l) + ".";
    out.emplace_back(p + "ln1_gain", &b.ln1_gain);
    out.emplace_back(p + "ln1_bias", &b.ln1_bias);
    out.emplace_back(p + "wq", &b.wq);
    out.emplace_back(p + "bq", &b.bq);
    out.emplace_back(p + "wk", &b.wk);
    out.emplace_back(p + "bk", &b.bk);
    out.emplace_back(p + "wv", &b.wv);
    out.emplace_back(p + "bv", &b.bv);
    out.emplace_back(p + "wo", &b.wo);
    out.emplace_back(p + "bo", &b.bo);
    out.emplace_back(p + "ln2_gain", &b.ln2_gain);
    out.emplace_back(p + "ln2_bias", &b.ln2_bias);
    out.emplace_back(p + "w_in", &b.w_in);
    out.emplace_back(p + "b_in", &b.b_in);
    out.emplace_back(p + "w_out", &b.w_out);
    out.emplace_back(p + "b_out", &b.b_out);
  }
  out.emplace_back("lm.final_gain", &final_gain_);
  out.emplace_back("lm.final_bias", &final_bias_);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> ToyLM::NamedParameters() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<ToyLM*>(this)->NamedParameters()) {
    out.emplace_back(name, t);
  }
  return out;
}

void ToyLM::SetTrainable(bool trainable) {
  for (auto& [name, t] : NamedParameters()) {
    t->requires_grad = trainable;
    if (!trainable) t->grad.clear();
  }
}

size_t ToyLM::ParameterCount() const {
  size_t n = 0;
  for (const auto& [name, t] : NamedParameters()) n += t->numel();
  return n;
}

Var ToyLM::PositionsOnTape(Tape& tape, size_t first_position, size_t count) {
  if (first_position + count > config_.max_len) {
    throw ValidationError("sequence of length " + std::to_string(first_position + count) +
                          " exceeds max_len " + std::to_string(config_.max_len));
  }
  return ad::SliceRows(tape, tape.Watch(position_embedding_), first_position, count);
}

Var ToyLM::EmbedTokensOnTape(Tape& tape, std::span<const TokenId> ids,
                             size_t first_position) {
  Var tokens = ad::Embedding(tape, tape.Watch(token_embedding_), ids);
  return ad::Add(tape, tokens, PositionsOnTape(tape, first_position, ids.size()));
}

Var ToyLM::HiddenOnTape(Tape& tape, Var x) {
  if (x->rows() > config_.max_len) throw ValidationError("sequence exceeds max_len");
  for (DecoderBlock& b : blocks_) {
    Var h = ad::LayerNorm(tape, x, tape.Watch(b.ln1_gain), tape.Watch(b.ln1_bias));
    Var q = ad::AddBias(tape, ad::MatMul(tape, h, tape.Watch(b.wq)), tape.Watch(b.bq));
    Var k = ad::AddBias(tape, ad::MatMul(tape, h, tape.Watch(b.wk)), tape.Watch(b.bk));
    Var v = ad::AddBias(tape, ad::MatMul(tape, h, tape.Watch(b.wv)), tape.Watch(b.bv));
    Var att = ad::CausalSelfAttention(tape, q, k, v, config_.heads);
    Var proj = ad::AddBias(tape, ad::MatMul(tape, att, tape.Watch(b.wo)), tape.Watch(b.bo));
    x = ad::Add(tape, x, proj);
    Var h2 = ad::LayerNorm(tape, x, tape.Watch(b.ln2_gain), tape.Watch(b.ln2_bias));
    Var up = ad::AddBias(tape, ad::MatMul(tape, h2, tape.Watch(b.w_in)), tape.Watch(b.b_in));
    Var act = ad::Gelu(tape, up);
    Var down =
        ad::AddBias(tape, ad::MatMul(tape, act, tape.Watch(b.w_out)), tape.Watch(b.b_out));
    x = ad::Add(tape, x, down);
  }
  return ad::LayerNorm(tape, x, tape.Watch(final_gain_), tape.Watch(final_bias_));
}

Var ToyLM::LogitsOnTape(Tape& tape, Var hidden) {
  return ad::MatMulNT(tape, hidden, tape.Watch(token_embedding_));
}

void ToyLM::BlockForward(const DecoderBlock& b, Tensor& x, Tensor& keys, Tensor& values,
                         size_t past) const {
  const size_t rows = x.rows(), d = config_.d_model;
  Tensor h = Norm(x, b.ln1_gain, b.ln1_bias);
  Tensor q = Affine(h, b.wq, b.bq);
  Tensor k = Affine(h, b.wk, b.bk);
  Tensor v = Affine(h, b.wv, b.bv);
  keys = past == 0 ? std::move(k) : AppendRows(keys, k);
  values = past == 0 ? std::move(v) : AppendRows(values, v);
  Tensor att({rows, d});
  kernels::CausalAttention(q.data, keys.data, values.data, att.data, {}, rows, past + rows, d,
                           config_.heads, past);
  Tensor proj = Affine(att, b.wo, b.bo);
  for (size_t i = 0; i < x.numel(); ++i) x.data[i] += proj.data[i];
  Tensor h2 = Norm(x, b.ln2_gain, b.ln2_bias);
  Tensor up = Affine(h2, b.w_in, b.b_in);
  Tensor act(up.shape);
  kernels::Gelu(up.data, act.data);
  Tensor down = Affine(act, b.w_out, b.b_out);
  for (size_t i = 0; i < x.numel(); ++i) x.data[i] += down.data[i];
}

Tensor ToyLM::FinalNormAndProject(const Tensor& x, bool project) const {
  Tensor h = Norm(x, final_gain_, final_bias_);
  if (!project) return h;
  Tensor logits({h.rows(), config_.vocab_size});
  kernels::MatMulNT(h.data, token_embedding_.data, logits.data, h.rows(), config_.d_model,
                    config_.vocab_size);
  return logits;
}

Tensor ToyLM::Hidden(const Tensor& embeddings) const {
  if (embeddings.cols() != config_.d_model) throw ValidationError("embedding width mismatch");
  if (embeddings.rows() > config_.max_len) throw ValidationError("sequence exceeds max_len");
  Tensor x = embeddings;
  x.grad.clear();
  for (const DecoderBlock& b : blocks_) {
    Tensor keys, values;
    BlockForward(b, x, keys, values, 0);
  }
  return FinalNormAndProject(x, false);
}

Tensor ToyLM::Logits(const Tensor& embeddings) const {
  Tensor h = Hidden(embeddings);
  Tensor logits({h.rows(), config_.vocab_size});
  kernels::MatMulNT(h.data, token_embedding_.data, logits.data, h.rows(), config_.d_model,
                    config_.vocab_size);
  return logits;
}

PromptCache ToyLM::Encode(const Tensor& embeddings) const {
  if (embeddings.rows() == 0) throw ValidationError("cannot encode an empty prompt");
  if (embeddings.cols() != config_.d_model) throw ValidationError("embedding width mismatch");
  if (embeddings.rows() > config_.max_len) {
    throw ValidationError("prompt of length " + std::to_string(embeddings.rows()) +
                          " exceeds max_len " + std::to_string(config_.max_len));
  }
  PromptCache cache;
  cache.length = embeddings.rows();
  cache.keys.resize(blocks_.size());
  cache.values.resize(blocks_.size());
  Tensor x = embeddings;
  x.grad.clear();
  for (size_t l = 0; l < blocks_.size(); ++l) {
    BlockForward(blocks_[l], x, cache.keys[l], cache.values[l], 0);
  }
  Tensor last({1, config_.d_model});
  std::copy_n(x.data.end() - static_cast<std::ptrdiff_t>(config_.d_model), config_.d_model,
              last.data.begin());
  Tensor logits = FinalNormAndProject(last, true);
  cache.last_logits = Tensor({config_.vocab_size}, std::move(logits.data));
  return cache;
}

Tensor ToyLM::ExtendLogits(const PromptCache& cache, std::span<const TokenId> suffix) const {
  if (suffix.empty()) return Tensor({0, config_.vocab_size});
  if (cache.length + suffix.size() > config_.max_len) {
    throw ValidationError("sequence exceeds max_len " + std::to_string(config_.max_len));
  }
  Tensor x = EmbedTokens(suffix, cache.length);
  for (size_t l = 0; l < blocks_.size(); ++l) {
    Tensor keys = cache.keys[l];
    Tensor values = cache.values[l];
    BlockForward(blocks_[l], x, keys, values, cache.length);
  }
  return FinalNormAndProject(x, true);
}

Tensor ToyLM::EmbedTokens(std::span<const TokenId> ids, size_t first_position) const {
  const size_t d = config_.d_model;
  if (first_position + ids.size() > config_.max_len) {
    throw ValidationError("sequence exceeds max_len " + std::to_string(config_.max_len));
  }
  Tensor out({ids.size(), d});
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= config_.vocab_size) throw ValidationError("token id outside vocabulary");
    for (size_t c = 0; c < d; ++c) {
      out.data[i * d + c] = token_embedding_.data[ids[i] * d + c] +
                            position_embedding_.data[(first_position + i) * d + c];
    }
  }
  return out;
}

}  // namespace gemel
