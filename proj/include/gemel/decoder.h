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

#ifndef GEMEL_DECODER_H_
#define GEMEL_DECODER_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gemel/entity_trie.h"
#include "gemel/kb_store.h"
#include "gemel/model_bundle.h"
#include "gemel/prompt.h"
#include "gemel/tokenizer.h"

namespace gemel {

struct DecodeConfig {
  size_t beam = 5;
  size_t max_answer_len = 32;  // decode steps, EOS included
  bool length_normalize = false;
};

struct BeamHypothesis {
  TokenSeq ids;  // emitted tokens, EOS excluded
  double logprob = 0;
  bool finished = false;
};

struct LinkCandidate {
  uint32_t entity = 0;  // KB ordinal
  std::string entity_id;
  std::string name;
  TokenSeq ids;
  double logprob = 0;
};

// Next-token log-probabilities (length |V|) after `prefix` of the answer.
using NextLogProbs = std::function<void(std::span<const TokenId> prefix, std::vector<double>& out)>;

// Beam search driven by an arbitrary next-token distribution. With a trie,
// continuations are restricted to it and EOS is allowed only at terminal
// nodes; without one every non-special token and EOS is allowed. Candidates
// of a step are ranked by score, ties by lexicographic token ids; an EOS
// candidate ranked within the beam retires to the finished pool and the
// beam is refilled from the remaining candidates. Returns up to `beam`
// hypotheses, best first. Unfinished hypotheses appear only when the step
// cap is reached.
std::vector<BeamHypothesis> BeamSearch(const NextLogProbs& next, size_t vocab_size,
                                       const EntityTrie* trie, const DecodeConfig& cfg);

// Score used for ranking: the raw sum, or the sum per emitted token
// (EOS counted) when length normalization is on.
double HypothesisScore(const BeamHypothesis& h, const DecodeConfig& cfg);

// Ordering of hypotheses: score descending, then token ids ascending.
bool RanksBefore(const BeamHypothesis& a, const BeamHypothesis& b, const DecodeConfig& cfg);

// Next-token function backed by the model with the prompt encoded once.
NextLogProbs ModelNextLogProbs(const ModelBundle& model, const PromptSequence& prompt);

// Ranked KB entities. Throws ValidationError on an empty trie, a beam of 0,
// or when no hypothesis finishes within the step cap.
std::vector<LinkCandidate> ConstrainedBeamSearch(const ModelBundle& model,
                                                 const PromptSequence& prompt,
                                                 const EntityTrie& trie, const KnowledgeBase& kb,
                                                 const DecodeConfig& cfg);

// Sum of log p(answer[i] | prompt, answer[<i]). `answer` should end with
// EOS. Throws ValidationError for an empty answer or a length overflow.
double ScoreSequence(const ModelBundle& model, const PromptSequence& prompt,
                     std::span<const TokenId> answer);

struct FreeformOutput {
  BeamHypothesis hypothesis;
  std::string text;
};

// Beam search without the trie.
std::vector<FreeformOutput> UnconstrainedDecode(const ModelBundle& model,
                                                const PromptSequence& prompt,
                                                const DecodeConfig& cfg);

}  // namespace gemel

#endif  // GEMEL_DECODER_H_
