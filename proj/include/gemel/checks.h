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

#ifndef GEMEL_CHECKS_H_
#define GEMEL_CHECKS_H_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gemel/kb_store.h"
#include "gemel/model_bundle.h"
#include "gemel/prompt.h"
#include "gemel/rng.h"
#include "gemel/tokenizer.h"

namespace gemel {

// Outcome of one self-test routine.
struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

struct RandomKb {
  KnowledgeBase kb;
  Vocabulary vocab;  // KB words, template words and a few unused words
};

// KB of 1..max_entities entities whose names are 1..max_name_tokens words
// drawn from a small pool, with pairwise distinct token sequences.
RandomKb MakeRandomKb(Rng& rng, size_t max_entities = 50, size_t max_name_tokens = 6);

struct TinyModelSpec {
  size_t d_t = 16;
  size_t layers = 2;
  size_t heads = 2;
  size_t d_v = 8;
  size_t prefix_len = 2;
  size_t max_len = 128;
  double init_std = 0.5;
};

// Randomly initialized model (mapper included) over synthetic hash features.
ModelBundle MakeRandomModel(const Vocabulary& vocab, const TinyModelSpec& spec, uint64_t seed);

// Query prompt with a visual prefix and a few random context words.
PromptSequence MakeRandomPrompt(const ModelBundle& model, const KnowledgeBase& kb, Rng& rng);

// Central-difference gradient check on the mapper weight.
struct GradientCheckStats {
  size_t coordinates = 0;
  double max_rel_error = 0;
};
GradientCheckStats GradientCheckMapper(ModelBundle& model, const PromptSequence& prompt,
                                       const TokenSeq& answer, double epsilon = 1e-5);
// |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradientRelFloor = 1e-6;

CheckResult CheckTrieLanguage(size_t kbs, uint64_t seed);
CheckResult CheckDecoderOracle(size_t kbs, uint64_t seed);
CheckResult CheckValidityFuzz(size_t draws, uint64_t seed);
CheckResult CheckGradients(size_t configs, uint64_t seed);
CheckResult CheckBm25(size_t corpora, uint64_t seed);
CheckResult CheckLossAnalytics(size_t draws, uint64_t seed);
CheckResult CheckRoundTrips(uint64_t seed);

// Every check above; `quick` shrinks the trial counts.
std::vector<CheckResult> RunSelfTest(uint64_t seed, bool quick);

}  // namespace gemel

#endif  // GEMEL_CHECKS_H_
