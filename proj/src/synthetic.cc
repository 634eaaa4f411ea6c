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

#include "gemel/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gemel/errors.h"
#include "gemel/rng.h"

namespace gemel {
namespace {

const std::vector<std::string>& Fillers() {
  static const std::vector<std::string> fillers = {
      "{} came up again .", "we talked about {} .", "everyone mentioned {} today .",
      "{} was discussed .", "they asked about {} ."};
  return fillers;
}

std::string Fill(const std::string& pattern, const std::string& word) {
  std::string out = pattern;
  out.replace(out.find("{}"), 2, word);
  return out;
}

MentionInstance MakeInstance(const std::string& id, const std::string& word,
                             const std::string& pattern) {
  MentionInstance inst;
  inst.id = id;
  inst.text = Fill(pattern, word);
  inst.mention = word;
  auto span = FindSpan(inst.text, word);
  inst.span_start = span->first;
  inst.span_end = span->second;
  return inst;
}

std::string EntityId(const std::string& word, const std::string& type) {
  return word + "_" + type;
}

std::vector<std::string> CommonVocabText(const std::vector<std::string>& types) {
  std::vector<std::string> text = {TemplateText()};
  for (const std::string& f : Fillers()) text.push_back(Fill(f, ""));
  for (const std::string& t : types) text.push_back(t);
  return text;
}

}  // namespace

std::string SyntheticWord(size_t index) {
  static const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
  static const char* kVowels[] = {"a", "e", "i", "o", "u"};
  std::string word;
  size_t v = index;
  for (int syllable = 0; syllable < 2; ++syllable) {
    word += kOnsets[v % 14];
    v /= 14;
    word += kVowels[v % 5];
    v /= 5;
  }
  while (v > 0) {
    word += kOnsets[v % 14];
    v /= 14;
    word += "o";
  }
  return word;
}

std::vector<int64_t> SkewedCounts(size_t n, uint64_t seed) {
  std::vector<size_t> ranks(n);
  std::iota(ranks.begin(), ranks.end(), size_t{0});
  Rng rng = Rng::Stream(seed, "synthetic/counts");
  rng.Shuffle(ranks);
  std::vector<int64_t> counts(n);
  for (size_t i = 0; i < n; ++i) {
    counts[i] = static_cast<int64_t>(std::floor(2000.0 / std::pow(ranks[i] + 1.0, 1.2)));
  }
  return counts;
}

SyntheticTask MakeVisualPairs(const VisualPairsOptions& options) {
  if (options.words == 0 || options.types.size() < 2) {
    throw ValidationError("visual pairs need words and at least two types");
  }
  SyntheticTask task;
  const size_t entities = options.words * options.types.size();
  std::vector<int64_t> counts = SkewedCounts(entities, options.seed);
  std::vector<EntityRecord> records;
  for (size_t w = 0; w < options.words; ++w) {
    for (size_t t = 0; t < options.types.size(); ++t) {
      const std::string word = SyntheticWord(w);
      records.push_back({EntityId(word, options.types[t]), word + " ( " + options.types[t] + " )",
                         counts[w * options.types.size() + t]});
    }
  }
  task.kb = KnowledgeBase(std::move(records));
  task.vocab_text = CommonVocabText(options.types);

  Rng proto_rng = Rng::Stream(options.seed, "synthetic/prototypes");
  std::vector<std::vector<double>> prototypes(options.types.size(),
                                              std::vector<double>(options.d_v));
  for (auto& p : prototypes) {
    for (double& v : p) v = proto_rng.UniformInt(2) == 0 ? -1.0 : 1.0;
  }
  Rng rng = Rng::Stream(options.seed, "synthetic/instances");
  std::vector<std::string> refs;
  std::vector<std::vector<double>> rows;
  auto make_split = [&](const std::string& split, size_t count) {
    std::vector<MentionInstance> out;
    for (size_t i = 0; i < count; ++i) {
      // Training covers every (word, type) pair before repeating any.
      const size_t pair = split == "train" && i < entities ? i : rng.UniformInt(entities);
      const size_t w = pair / options.types.size();
      const size_t t = pair % options.types.size();
      const std::string word = SyntheticWord(w);
      MentionInstance inst = MakeInstance(split + std::to_string(i), word,
                                          Fillers()[rng.UniformInt(Fillers().size())]);
      inst.image_ref = "img/" + inst.id;
      inst.gold = EntityId(word, options.types[t]);
      std::vector<double> feature = prototypes[t];
      for (double& v : feature) v += rng.Normal(0.0, options.noise);
      refs.push_back(*inst.image_ref);
      rows.push_back(std::move(feature));
      task.instance_type[inst.id] = options.types[t];
      out.push_back(std::move(inst));
    }
    return out;
  };
  task.train = make_split("train", options.train);
  task.test = make_split("test", options.test);
  task.features = std::make_shared<VisionFeatureStore>(options.d_v, refs, rows);
  return task;
}

SyntheticTask MakeIclWorld(const IclWorldOptions& options, uint64_t world_seed) {
  if (options.mentions == 0 || options.types.size() < 2 ||
      options.type_prior.size() != options.types.size()) {
    throw ValidationError("icl world needs mentions and one prior weight per type");
  }
  SyntheticTask task;
  std::vector<EntityRecord> records;
  std::vector<int64_t> counts =
      SkewedCounts(options.mentions * options.types.size(), /*seed=*/7);
  for (size_t m = 0; m < options.mentions; ++m) {
    for (size_t t = 0; t < options.types.size(); ++t) {
      const std::string word = SyntheticWord(m);
      records.push_back({EntityId(word, options.types[t]), word + " ( " + options.types[t] + " )",
                         counts[m * options.types.size() + t]});
    }
  }
  task.kb = KnowledgeBase(std::move(records));
  task.vocab_text = CommonVocabText(options.types);

  Rng rng = Rng::Stream(world_seed, "synthetic/world");
  auto draw_prior = [&]() {
    double u = rng.Uniform01();
    for (size_t t = 0; t < options.type_prior.size(); ++t) {
      if (u < options.type_prior[t]) return t;
      u -= options.type_prior[t];
    }
    return options.type_prior.size() - 1;
  };
  std::vector<size_t> preferred(options.mentions);
  for (size_t& p : preferred) p = draw_prior();
  if (options.shared_preference) std::fill(preferred.begin(), preferred.end(), preferred[0]);
  auto make_split = [&](const std::string& split, size_t count) {
    std::vector<MentionInstance> out;
    for (size_t i = 0; i < count; ++i) {
      const size_t m = i % options.mentions;
      size_t t = preferred[m];
      if (rng.Uniform01() >= options.consistency) {
        t = (t + 1 + rng.UniformInt(options.types.size() - 1)) % options.types.size();
      }
      const std::string word = SyntheticWord(m);
      MentionInstance inst = MakeInstance(split + std::to_string(i), word,
                                          Fillers()[rng.UniformInt(Fillers().size())]);
      inst.gold = EntityId(word, options.types[t]);
      task.instance_type[inst.id] = options.types[t];
      out.push_back(std::move(inst));
    }
    rng.Shuffle(out);
    return out;
  };
  task.train = make_split("train", options.train);
  task.test = make_split("test", options.test);
  task.features = std::make_shared<VisionFeatureStore>(VisionFeatureStore::SyntheticHash(1));
  return task;
}

TokenSeq CaptionedSequence(const Vocabulary& vocab, const KnowledgeBase& kb,
                           std::span<const MentionInstance> demos, const MentionInstance& query,
                           const std::unordered_map<std::string, std::string>& instance_type,
                           size_t prefix_len, bool with_captions) {
  PromptOptions options;
  options.use_visual = false;
  TokenSeq out;
  auto append = [&](const MentionInstance& inst) {
    if (with_captions) {
      const TokenId caption = vocab.Lookup(instance_type.at(inst.id));
      out.insert(out.end(), prefix_len, caption);
    }
    for (const PromptSegment& seg : FormatDemonstration(vocab, kb, inst, true, options)) {
      const TokenSeq& ids = std::get<TokenSpan>(seg).ids;
      out.insert(out.end(), ids.begin(), ids.end());
    }
  };
  for (const MentionInstance& d : demos) append(d);
  append(query);
  return out;
}

}  // namespace gemel
