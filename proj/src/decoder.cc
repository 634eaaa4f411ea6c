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

#include "gemel/decoder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "gemel/errors.h"
#include "gemel/kernels.h"

namespace gemel {

double HypothesisScore(const BeamHypothesis& h, const DecodeConfig& cfg) {
  if (!cfg.length_normalize) return h.logprob;
  const size_t len = h.ids.size() + (h.finished ? 1 : 0);
  return len == 0 ? h.logprob : h.logprob / static_cast<double>(len);
}

bool RanksBefore(const BeamHypothesis& a, const BeamHypothesis& b, const DecodeConfig& cfg) {
  const double sa = HypothesisScore(a, cfg);
  const double sb = HypothesisScore(b, cfg);
  if (sa != sb) return sa > sb;
  if (a.ids != b.ids) return a.ids < b.ids;
  return a.finished && !b.finished;
}

std::vector<BeamHypothesis> BeamSearch(const NextLogProbs& next, size_t vocab_size,
                                       const EntityTrie* trie, const DecodeConfig& cfg) {
  if (cfg.beam == 0) throw ValidationError("beam size must be at least 1");
  if (trie != nullptr && trie->node_count() <= 1) throw ValidationError("empty trie");
  auto ranks = [&](const BeamHypothesis& a, const BeamHypothesis& b) {
    return RanksBefore(a, b, cfg);
  };
  std::vector<TokenId> free_tokens;
  if (trie == nullptr) {
    free_tokens.push_back(special::kEos);
    for (TokenId t = special::kCount; t < vocab_size; ++t) free_tokens.push_back(t);
  }

  std::vector<BeamHypothesis> alive = {BeamHypothesis{}};
  std::vector<BeamHypothesis> finished;
  std::vector<double> logp;
  bool capped = false;
  for (size_t step = 0; !alive.empty(); ++step) {
    if (step == cfg.max_answer_len) {
      capped = true;
      break;
    }
    std::vector<BeamHypothesis> candidates;
    for (const BeamHypothesis& h : alive) {
      next(h.ids, logp);
      if (logp.size() != vocab_size) throw ValidationError("next-token distribution has wrong size");
      const std::vector<TokenId> allowed =
          trie != nullptr ? trie->AllowedContinuations(h.ids) : free_tokens;
      for (TokenId tok : allowed) {
        BeamHypothesis c;
        c.logprob = h.logprob + logp[tok];
        c.ids = h.ids;
        if (tok == special::kEos) {
          c.finished = true;
        } else {
          c.ids.push_back(tok);
        }
        candidates.push_back(std::move(c));
      }
    }
    std::sort(candidates.begin(), candidates.end(), ranks);
    alive.clear();
    for (size_t rank = 0; rank < candidates.size() && alive.size() < cfg.beam; ++rank) {
      if (candidates[rank].finished) {
        if (rank < cfg.beam) finished.push_back(std::move(candidates[rank]));
      } else {
        alive.push_back(std::move(candidates[rank]));
      }
    }
    if (finished.size() >= cfg.beam) {
      std::sort(finished.begin(), finished.end(), ranks);
      finished.resize(cfg.beam);
      // Raw sums only decrease as hypotheses grow.
      if (!cfg.length_normalize && !alive.empty() &&
          alive.front().logprob < finished.back().logprob) {
        break;
      }
    }
  }
  std::vector<BeamHypothesis> results = std::move(finished);
  if (capped) {
    for (BeamHypothesis& h : alive) results.push_back(std::move(h));
  }
  std::sort(results.begin(), results.end(), ranks);
  if (results.size() > cfg.beam) results.resize(cfg.beam);
  return results;
}

namespace {

struct EncodedPrompt {
  const ModelBundle* model;
  PromptCache cache;
};

void LastRowLogProbs(const Tensor& logits, size_t row, std::vector<double>& out) {
  const size_t vocab = logits.cols();
  out.resize(vocab);
  kernels::LogSoftmax(std::span<const double>(logits.data).subspan(row * vocab, vocab), out, 1,
                      vocab);
}

std::shared_ptr<EncodedPrompt> Encode(const ModelBundle& model, const PromptSequence& prompt) {
  auto enc = std::make_shared<EncodedPrompt>();
  enc->model = &model;
  enc->cache = model.lm.Encode(model.EmbedSequence(prompt));
  return enc;
}

}  // namespace

NextLogProbs ModelNextLogProbs(const ModelBundle& model, const PromptSequence& prompt) {
  std::shared_ptr<EncodedPrompt> enc = Encode(model, prompt);
  return [enc](std::span<const TokenId> prefix, std::vector<double>& out) {
    if (prefix.empty()) {
      LastRowLogProbs(enc->cache.last_logits, 0, out);
      return;
    }
    Tensor logits = enc->model->lm.ExtendLogits(enc->cache, prefix);
    LastRowLogProbs(logits, prefix.size() - 1, out);
  };
}

namespace {

DecodeConfig CapSteps(const ModelBundle& model, const PromptSequence& prompt, DecodeConfig cfg) {
  const size_t prompt_len = prompt.Length();
  const size_t max_len = model.config.lm.max_len;
  if (prompt_len == 0 || prompt_len > max_len) {
    throw ValidationError("prompt length " + std::to_string(prompt_len) +
                          " is outside [1, max_len]");
  }
  cfg.max_answer_len = std::min(cfg.max_answer_len, max_len - prompt_len + 1);
  return cfg;
}

}  // namespace

std::vector<LinkCandidate> ConstrainedBeamSearch(const ModelBundle& model,
                                                 const PromptSequence& prompt,
                                                 const EntityTrie& trie, const KnowledgeBase& kb,
                                                 const DecodeConfig& cfg) {
  if (trie.node_count() <= 1) throw ValidationError("empty trie");
  const DecodeConfig capped = CapSteps(model, prompt, cfg);
  std::vector<BeamHypothesis> hyps =
      BeamSearch(ModelNextLogProbs(model, prompt), model.vocab.size(), &trie, capped);
  std::vector<LinkCandidate> out;
  for (const BeamHypothesis& h : hyps) {
    if (!h.finished) continue;
    std::optional<uint32_t> entity = trie.Resolve(h.ids);
    if (!entity) throw ValidationError("finished hypothesis does not resolve to an entity");
    const EntityRecord& rec = kb.at(*entity);
    out.push_back({*entity, rec.id, rec.name, h.ids, h.logprob});
  }
  if (out.empty()) {
    std::string deepest;
    if (!hyps.empty()) {
      for (TokenId t : hyps.front().ids) deepest += " " + model.vocab.token(t);
    }
    throw ValidationError("no entity name finished within " +
                          std::to_string(capped.max_answer_len) + " steps; best partial:" +
                          deepest);
  }
  return out;
}

double ScoreSequence(const ModelBundle& model, const PromptSequence& prompt,
                     std::span<const TokenId> answer) {
  if (answer.empty()) throw ValidationError("empty answer");
  const size_t prompt_len = prompt.Length();
  if (prompt_len + answer.size() - 1 > model.config.lm.max_len) {
    throw ValidationError("prompt plus answer exceeds max_len");
  }
  PromptCache cache = model.lm.Encode(model.EmbedSequence(prompt));
  std::vector<double> logp;
  LastRowLogProbs(cache.last_logits, 0, logp);
  double total = logp.at(answer[0]);
  if (answer.size() > 1) {
    Tensor logits = model.lm.ExtendLogits(cache, answer.first(answer.size() - 1));
    for (size_t i = 1; i < answer.size(); ++i) {
      LastRowLogProbs(logits, i - 1, logp);
      total += logp.at(answer[i]);
    }
  }
  return total;
}

std::vector<FreeformOutput> UnconstrainedDecode(const ModelBundle& model,
                                                const PromptSequence& prompt,
                                                const DecodeConfig& cfg) {
  const DecodeConfig capped = CapSteps(model, prompt, cfg);
  std::vector<FreeformOutput> out;
  for (BeamHypothesis& h :
       BeamSearch(ModelNextLogProbs(model, prompt), model.vocab.size(), nullptr, capped)) {
    std::string text = Detokenize(model.vocab, h.ids);
    out.push_back({std::move(h), std::move(text)});
  }
  return out;
}

}  // namespace gemel
