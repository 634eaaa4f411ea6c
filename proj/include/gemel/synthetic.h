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

#ifndef GEMEL_SYNTHETIC_H_
#define GEMEL_SYNTHETIC_H_

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "gemel/kb_store.h"
#include "gemel/prompt.h"
#include "gemel/tokenizer.h"
#include "gemel/vision.h"

namespace gemel {

// A generated linking task.
struct SyntheticTask {
  KnowledgeBase kb;
  std::vector<MentionInstance> train;
  std::vector<MentionInstance> test;
  std::shared_ptr<const VisionFeatureStore> features;
  // Text that must be covered by the vocabulary.
  std::vector<std::string> vocab_text;
  // Type word behind each instance id.
  std::unordered_map<std::string, std::string> instance_type;
};

// Entities "<word> ( <type> )" for every word and type. Mention text never
// reveals the type; only the image features do (a per-type prototype plus
// Gaussian noise).
struct VisualPairsOptions {
  size_t words = 8;
  std::vector<std::string> types = {"film", "novel"};
  size_t train = 16;
  size_t test = 0;
  size_t d_v = 16;
  double noise = 0.25;
  uint64_t seed = 0;
};
SyntheticTask MakeVisualPairs(const VisualPairsOptions& options);

// Mentions of a fixed set of words, each of which refers to one of several
// typed entities. Within one world every word has a preferred type drawn from
// `type_prior`, used by a `consistency` fraction of its instances. Worlds
// differ only in that assignment, so the mention alone is ambiguous.
struct IclWorldOptions {
  size_t mentions = 4;
  std::vector<std::string> types = {"film", "novel", "band", "game"};
  std::vector<double> type_prior = {0.55, 0.25, 0.1, 0.1};
  double consistency = 0.9;
  // One preferred type for the whole world instead of one per mention.
  bool shared_preference = true;
  size_t train = 64;
  size_t test = 64;
};
SyntheticTask MakeIclWorld(const IclWorldOptions& options, uint64_t world_seed);

// Name of the i-th generated nonsense word.
std::string SyntheticWord(size_t index);

// Text-only rendering of a prompt sequence: each visual prefix becomes
// `prefix_len` copies of the instance's type word (a caption) and every
// segment carries its answer.
TokenSeq CaptionedSequence(const Vocabulary& vocab, const KnowledgeBase& kb,
                           std::span<const MentionInstance> demos, const MentionInstance& query,
                           const std::unordered_map<std::string, std::string>& instance_type,
                           size_t prefix_len, bool with_captions);

// Skewed entity counts: a Zipf-like profile over a random permutation.
std::vector<int64_t> SkewedCounts(size_t n, uint64_t seed);

}  // namespace gemel

#endif  // GEMEL_SYNTHETIC_H_
