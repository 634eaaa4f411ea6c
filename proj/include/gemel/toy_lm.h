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

#ifndef GEMEL_TOY_LM_H_
#define GEMEL_TOY_LM_H_

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gemel/autodiff.h"
#include "gemel/rng.h"
#include "gemel/tensor.h"
#include "gemel/tokenizer.h"

namespace gemel {

struct LmConfig {
  size_t vocab_size = 0;
  size_t d_model = 64;  // d_t
  size_t layers = 2;
  size_t heads = 4;
  size_t max_len = 512;
  double init_std = 0.02;
};

// Pre-norm decoder block: causal multi-head attention and a GELU
// feed-forward of width 4 * d_model, each wrapped in a residual connection.
struct DecoderBlock {
  Tensor ln1_gain, ln1_bias;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;  // weights stored [in, out]
  Tensor ln2_gain, ln2_bias;
  Tensor w_in, b_in, w_out, b_out;
};

// Keys and values of an already-encoded prompt, per layer.
struct PromptCache {
  size_t length = 0;
  std::vector<Tensor> keys;    // [length, d] per layer
  std::vector<Tensor> values;  // [length, d] per layer
  Tensor last_logits;          // [vocab]; logits at the final prompt position
};

// Small autoregressive transformer with tied input/output embeddings and
// learned absolute positions.
class ToyLM {
 public:
  ToyLM() = default;
  // Normal(0, init_std) weights, unit layer-norm gains, zero biases.
  static ToyLM Initialize(const LmConfig& config, Rng& rng);

  const LmConfig& config() const { return config_; }
  const Tensor& token_embedding() const { return token_embedding_; }
  const Tensor& position_embedding() const { return position_embedding_; }

  // Stable (name, tensor) listing used for checkpoints and optimizers.
  std::vector<std::pair<std::string, Tensor*>> NamedParameters();
  std::vector<std::pair<std::string, const Tensor*>> NamedParameters() const;
  void SetTrainable(bool trainable);
  size_t ParameterCount() const;

  // --- Taped path (training) -------------------------------------------
  // Final layer-normed hidden states for input embeddings [T, d] that
  // already include positional embeddings.
  Var HiddenOnTape(Tape& tape, Var embeddings);
  Var LogitsOnTape(Tape& tape, Var hidden);
  // Token + position embeddings for `ids` placed at positions
  // [first_position, first_position + ids.size()).
  Var EmbedTokensOnTape(Tape& tape, std::span<const TokenId> ids, size_t first_position);
  Var PositionsOnTape(Tape& tape, size_t first_position, size_t count);

  // --- Inference path ----------------------------------------------------
  // Hidden states [T, d] (after the final layer norm).
  Tensor Hidden(const Tensor& embeddings) const;
  Tensor Logits(const Tensor& embeddings) const;
  // Encodes a prompt given its full input embeddings.
  PromptCache Encode(const Tensor& embeddings) const;
  // Logits [S, V] at every position of `suffix`, which continues the cached
  // prompt. Row s predicts the token after suffix[s].
  Tensor ExtendLogits(const PromptCache& cache, std::span<const TokenId> suffix) const;

  // Token + position embeddings without a tape.
  Tensor EmbedTokens(std::span<const TokenId> ids, size_t first_position) const;

 private:
  // Shared block math for the inference path; x is [S, d] at positions
  // [past, past + S). Appends this block's keys/values to `keys`/`values`.
  void BlockForward(const DecoderBlock& block, Tensor& x, Tensor& keys, Tensor& values,
                    size_t past) const;
  Tensor FinalNormAndProject(const Tensor& x, bool project) const;

  LmConfig config_;
  Tensor token_embedding_;     // [V, d], tied with the output projection
  Tensor position_embedding_;  // [max_len, d]
  std::vector<DecoderBlock> blocks_;
  Tensor final_gain_, final_bias_;
};

}  // namespace gemel

#endif  // GEMEL_TOY_LM_H_
