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

#include "gemel/checks.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "gemel/autodiff.h"
#include "gemel/decoder.h"
#include "gemel/entity_trie.h"
#include "gemel/errors.h"
#include "gemel/retrieval.h"
#include "gemel/trainer.h"
#include "gemel/vision.h"

namespace gemel {
namespace {

const std::vector<std::string>& WordPool() {
  static const std::vector<std::string> pool = {
      "amber", "birch", "cedar", "delta", "ember", "fjord", "grove",
      "heron", "iris",  "juniper", "kestrel", "lumen", "(", ")"};
  return pool;
}

CheckResult Timed(const std::string& name, const std::function<std::string()>& body) {
  CheckResult r;
  r.name = name;
  const auto start = std::chrono::steady_clock::now();
  try {
    r.detail = body();
    r.pass = true;
  } catch (const std::exception& e) {
    r.detail = e.what();
    r.pass = false;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

[[noreturn]] void Fail(const std::string& what) { throw std::runtime_error(what); }

std::string Join(const std::vector<std::string>& words) {
  std::string out;
  for (const std::string& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

}  // namespace

RandomKb MakeRandomKb(Rng& rng, size_t max_entities, size_t max_name_tokens) {
  const auto& pool = WordPool();
  static const Vocabulary pool_vocab = [&] {
    std::vector<std::string> corpus = {Join(pool)};
    return BuildVocab(corpus, KnowledgeBase(std::vector<EntityRecord>{{"P", "amber", 0}}));
  }();
  const size_t target = 1 + rng.UniformInt(max_entities);
  std::set<std::string> names;
  for (size_t attempt = 0; names.size() < target && attempt < target * 20; ++attempt) {
    const size_t len = 1 + rng.UniformInt(max_name_tokens);
    std::vector<std::string> words;
    auto is_bracket = [](const std::string& w) { return w == "(" || w == ")"; };
    for (size_t i = 0; i < len; ++i) {
      std::string w = pool[rng.UniformInt(pool.size())];
      // No two brackets in a row.
      while (!words.empty() && is_bracket(words.back()) && is_bracket(w)) {
        w = pool[rng.UniformInt(pool.size())];
      }
      words.push_back(w);
    }
    // Canonical spacing.
    const std::string name = Detokenize(pool_vocab, Tokenize(pool_vocab, Join(words)));
    if (Detokenize(pool_vocab, Tokenize(pool_vocab, name)) == name) names.insert(name);
  }
  std::vector<EntityRecord> records;
  size_t i = 0;
  for (const std::string& name : names) {
    records.push_back({"E" + std::to_string(i++), name, static_cast<int64_t>(rng.UniformInt(1000))});
  }
  // Shuffle so ordinals do not follow lexicographic order.
  rng.Shuffle(records);
  RandomKb out;
  out.kb = KnowledgeBase(std::move(records));
  std::vector<std::string> corpora = {TemplateText(), Join(pool), "quartz sable wren"};
  out.vocab = BuildVocab(corpora, out.kb);
  return out;
}

ModelBundle MakeRandomModel(const Vocabulary& vocab, const TinyModelSpec& spec, uint64_t seed) {
  ModelConfig config;
  config.d_v = spec.d_v;
  config.prefix_len = spec.prefix_len;
  config.lm.d_model = spec.d_t;
  config.lm.layers = spec.layers;
  config.lm.heads = spec.heads;
  config.lm.max_len = spec.max_len;
  config.lm.init_std = spec.init_std;
  config.zero_init_mapper = false;
  auto features = std::make_shared<VisionFeatureStore>(VisionFeatureStore::SyntheticHash(spec.d_v));
  return ModelBundle::Initialize(config, vocab, features, seed);
}

PromptSequence MakeRandomPrompt(const ModelBundle& model, const KnowledgeBase& kb, Rng& rng) {
  const auto& pool = WordPool();
  std::vector<std::string> words;
  const size_t len = 1 + rng.UniformInt(4);
  for (size_t i = 0; i < len; ++i) words.push_back(pool[rng.UniformInt(12)]);
  MentionInstance inst;
  inst.id = "q";
  inst.text = Join(words);
  inst.mention = words[rng.UniformInt(words.size())];
  auto span = FindSpan(inst.text, inst.mention);
  inst.span_start = span->first;
  inst.span_end = span->second;
  inst.image_ref = "img" + std::to_string(rng.UniformInt(1000000));
  PromptOptions options;
  options.use_icl = false;
  options.prefix_len = model.config.prefix_len;
  return AssemblePrompt(model.vocab, kb, {}, inst, options);
}

GradientCheckStats GradientCheckMapper(ModelBundle& model, const PromptSequence& prompt,
                                       const TokenSeq& answer, double epsilon) {
  Tensor& w = model.mapper.weight;
  model.lm.SetTrainable(false);
  w.requires_grad = true;
  w.ZeroGrad();
  {
    Tape tape;
    tape.Backward(AnswerLossOnTape(tape, model, prompt, answer));
  }
  const std::vector<double> analytic = w.grad;
  w.requires_grad = false;
  w.grad.clear();
  auto loss_at = [&]() {
    Tape tape;
    return AnswerLossOnTape(tape, model, prompt, answer)->data[0];
  };
  GradientCheckStats stats;
  for (size_t i = 0; i < w.data.size(); ++i) {
    const double saved = w.data[i];
    w.data[i] = saved + epsilon;
    const double plus = loss_at();
    w.data[i] = saved - epsilon;
    const double minus = loss_at();
    w.data[i] = saved;
    const double numeric = (plus - minus) / (2 * epsilon);
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric), kGradientRelFloor});
    stats.max_rel_error = std::max(stats.max_rel_error, std::abs(analytic[i] - numeric) / denom);
    ++stats.coordinates;
  }
  return stats;
}

CheckResult CheckTrieLanguage(size_t kbs, uint64_t seed) {
  return Timed("trie_language", [&]() {
    Rng rng = Rng::Stream(seed, "checks/trie");
    for (size_t trial = 0; trial < kbs; ++trial) {
      RandomKb r = MakeRandomKb(rng);
      EntityTrie trie = EntityTrie::Build(r.kb, r.vocab);
      std::set<TokenSeq> expected;
      std::map<TokenSeq, uint32_t> expected_entity;
      for (size_t e = 0; e < r.kb.size(); ++e) {
        TokenSeq ids = Tokenize(r.vocab, r.kb.at(e).name);
        expected.insert(ids);
        expected_entity[ids] = static_cast<uint32_t>(e);
      }
      std::set<TokenSeq> accepted;
      TokenSeq path;
      std::function<void(EntityTrie::NodeIndex)> dfs = [&](EntityTrie::NodeIndex node) {
        const auto& n = trie.nodes()[node];
        if (n.terminal()) {
          accepted.insert(path);
          if (Detokenize(r.vocab, path) != r.kb.at(n.entity).name) {
            Fail("accepted sequence does not detokenize to its entity name");
          }
          if (expected_entity.count(path) == 0 || expected_entity[path] != n.entity) {
            Fail("trie terminal maps to the wrong entity");
          }
        }
        if (!n.terminal() && n.children.empty()) Fail("trie has a dead-end leaf");
        for (const auto& [tok, child] : n.children) {
          path.push_back(tok);
          dfs(child);
          path.pop_back();
        }
      };
      dfs(EntityTrie::kRoot);
      if (accepted != expected) {
        Fail("trie language differs from the KB name set (trial " + std::to_string(trial) + ")");
      }
      // A few random sequences outside the set must be rejected.
      for (int probe = 0; probe < 20; ++probe) {
        TokenSeq ids;
        const size_t len = 1 + rng.UniformInt(6);
        for (size_t i = 0; i < len; ++i) {
          ids.push_back(static_cast<TokenId>(special::kCount + rng.UniformInt(r.vocab.size() - special::kCount)));
        }
        if (trie.Resolve(ids).has_value() != (expected.count(ids) > 0)) {
          Fail("trie resolves a sequence outside the KB");
        }
      }
      if (!(EntityTrie::Deserialize(trie.Serialize()) == trie)) {
        Fail("trie round trip changed the structure");
      }
    }
    return std::to_string(kbs) + " KBs";
  });
}

CheckResult CheckDecoderOracle(size_t kbs, uint64_t seed) {
  return Timed("decoder_oracle", [&]() {
    Rng rng = Rng::Stream(seed, "checks/decoder");
    for (size_t trial = 0; trial < kbs; ++trial) {
      RandomKb r = MakeRandomKb(rng);
      EntityTrie trie = EntityTrie::Build(r.kb, r.vocab);
      ModelBundle model = MakeRandomModel(r.vocab, {}, rng.NextU64());
      PromptSequence prompt = MakeRandomPrompt(model, r.kb, rng);
      DecodeConfig cfg;
      cfg.beam = r.kb.size();
      std::vector<LinkCandidate> got = ConstrainedBeamSearch(model, prompt, trie, r.kb, cfg);
      std::vector<BeamHypothesis> oracle;
      for (size_t e = 0; e < r.kb.size(); ++e) {
        BeamHypothesis h;
        h.ids = Tokenize(r.vocab, r.kb.at(e).name);
        TokenSeq with_eos = h.ids;
        with_eos.push_back(special::kEos);
        h.logprob = ScoreSequence(model, prompt, with_eos);
        h.finished = true;
        oracle.push_back(std::move(h));
      }
      std::sort(oracle.begin(), oracle.end(), [&](const auto& a, const auto& b) {
        return RanksBefore(a, b, cfg);
      });
      if (got.size() != oracle.size()) {
        Fail("beam returned " + std::to_string(got.size()) + " of " +
             std::to_string(oracle.size()) + " entities (trial " + std::to_string(trial) + ")");
      }
      for (size_t i = 0; i < got.size(); ++i) {
        if (got[i].ids != oracle[i].ids || got[i].logprob != oracle[i].logprob) {
          Fail("ranking differs from enumeration at rank " + std::to_string(i) + " (trial " +
               std::to_string(trial) + ")");
        }
      }
    }
    return std::to_string(kbs) + " KBs, identical rankings";
  });
}

CheckResult CheckValidityFuzz(size_t draws, uint64_t seed) {
  return Timed("validity_fuzz", [&]() {
    Rng rng = Rng::Stream(seed, "checks/fuzz");
    size_t out_of_kb = 0;
    for (size_t draw = 0; draw < draws; ++draw) {
      RandomKb r = MakeRandomKb(rng, 20, 4);
      EntityTrie trie = EntityTrie::Build(r.kb, r.vocab);
      TinyModelSpec spec;
      spec.d_t = 8;
      spec.layers = 1;
      spec.init_std = 0.3 + rng.Uniform01();
      ModelBundle model = MakeRandomModel(r.vocab, spec, rng.NextU64());
      PromptSequence prompt = MakeRandomPrompt(model, r.kb, rng);
      DecodeConfig cfg;
      cfg.max_answer_len = 8;
      std::vector<LinkCandidate> top = ConstrainedBeamSearch(model, prompt, trie, r.kb, cfg);
      if (!trie.Resolve(top.front().ids) || !r.kb.FindByName(top.front().name)) {
        Fail("constrained output outside the KB (draw " + std::to_string(draw) + ")");
      }
      std::vector<FreeformOutput> free = UnconstrainedDecode(model, prompt, cfg);
      if (!free.front().hypothesis.finished || !trie.Resolve(free.front().hypothesis.ids)) {
        ++out_of_kb;
      }
    }
    if (out_of_kb == 0) Fail("unconstrained decoding never left the KB");
    return std::to_string(draws) + " draws, 0 constrained violations, " +
           std::to_string(out_of_kb) + " unconstrained outputs outside the KB";
  });
}

CheckResult CheckGradients(size_t configs, uint64_t seed) {
  return Timed("gradient_check", [&]() {
    Rng rng = Rng::Stream(seed, "checks/gradient");
    double worst = 0;
    size_t coords = 0;
    for (size_t c = 0; c < configs; ++c) {
      RandomKb r = MakeRandomKb(rng, 6, 3);
      if (r.vocab.size() > 40) Fail("gradient-check vocabulary too large");
      TinyModelSpec spec;
      const size_t widths[] = {4, 8, 12, 16};
      const size_t prefixes[] = {1, 2, 4};
      spec.d_t = widths[rng.UniformInt(4)];
      spec.heads = spec.d_t % 2 == 0 && rng.UniformInt(2) == 1 ? 2 : 1;
      spec.layers = 1 + rng.UniformInt(2);
      spec.d_v = 2 + rng.UniformInt(5);
      spec.prefix_len = prefixes[rng.UniformInt(3)];
      spec.init_std = 0.3;
      ModelBundle model = MakeRandomModel(r.vocab, spec, rng.NextU64());
      PromptSequence prompt = MakeRandomPrompt(model, r.kb, rng);
      TokenSeq answer = AnswerTokens(r.vocab, r.kb, r.kb.at(rng.UniformInt(r.kb.size())).id);
      GradientCheckStats stats = GradientCheckMapper(model, prompt, answer);
      worst = std::max(worst, stats.max_rel_error);
      coords += stats.coordinates;
      if (stats.max_rel_error >= 1e-4) {
        Fail("relative error " + std::to_string(stats.max_rel_error) + " in config " +
             std::to_string(c));
      }
    }
    std::ostringstream os;
    os << configs << " configs, " << coords << " coordinates, max rel error " << worst;
    return os.str();
  });
}

CheckResult CheckBm25(size_t corpora, uint64_t seed) {
  return Timed("bm25_exact", [&]() {
    Rng rng = Rng::Stream(seed, "checks/bm25");
    const auto& pool = WordPool();
    double worst = 0;
    for (size_t c = 0; c < corpora; ++c) {
      const size_t docs = 1 + rng.UniformInt(20);
      const bool with_context = rng.UniformInt(2) == 1;
      std::vector<MentionInstance> instances;
      std::vector<std::vector<std::string>> naive_docs;
      for (size_t d = 0; d < docs; ++d) {
        auto words = [&](size_t max_len) {
          std::vector<std::string> w;
          const size_t len = 1 + rng.UniformInt(max_len);
          for (size_t i = 0; i < len; ++i) w.push_back(pool[rng.UniformInt(10)]);
          return w;
        };
        std::vector<std::string> mention = words(4);
        std::vector<std::string> context = words(8);
        MentionInstance inst;
        inst.id = "d" + std::to_string(d);
        inst.mention = Join(mention);
        inst.text = Join(context);
        instances.push_back(inst);
        if (with_context) mention.insert(mention.end(), context.begin(), context.end());
        naive_docs.push_back(mention);
      }
      DemonstrationPool dp(instances, with_context);
      Bm25Params params{0.5 + 1.5 * rng.Uniform01(), rng.Uniform01()};
      std::vector<std::string> query;
      const size_t qlen = 1 + rng.UniformInt(5);
      for (size_t i = 0; i < qlen; ++i) query.push_back(pool[rng.UniformInt(12)]);
      double avg = 0;
      for (const auto& d : naive_docs) avg += static_cast<double>(d.size());
      avg /= static_cast<double>(docs);
      for (size_t d = 0; d < docs; ++d) {
        double expected = 0;
        for (const std::string& q : query) {
          double tf = 0, df = 0;
          for (const std::string& w : naive_docs[d]) tf += w == q ? 1 : 0;
          for (const auto& other : naive_docs) {
            df += std::find(other.begin(), other.end(), q) != other.end() ? 1 : 0;
          }
          const double n = static_cast<double>(docs);
          const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
          const double len = static_cast<double>(naive_docs[d].size());
          expected += idf * tf * (params.k1 + 1) /
                      (tf + params.k1 * (1 - params.b + params.b * len / avg));
        }
        const double got = dp.Bm25Score(query, d, params);
        worst = std::max(worst, std::abs(got - expected));
        if (std::abs(got - expected) > 1e-9) {
          Fail("bm25 mismatch in corpus " + std::to_string(c));
        }
      }
    }
    std::ostringstream os;
    os << corpora << " corpora, max abs diff " << worst;
    return os.str();
  });
}

CheckResult CheckLossAnalytics(size_t draws, uint64_t seed) {
  return Timed("loss_analytics", [&]() {
    const TokenSeq three = {4, 17, 99};
    const double uniform = TeacherForcingLoss(Tensor({3, 100}, 0.0), three);
    if (std::abs(uniform - 3 * std::log(100.0)) > 1e-9) Fail("uniform loss is not 3 ln 100");
    const double binary = TeacherForcingLoss(Tensor({1, 2}, 0.0), TokenSeq{0});
    if (std::abs(binary - std::log(2.0)) > 1e-9) Fail("uniform binary loss is not ln 2");
    Rng rng = Rng::Stream(seed, "checks/loss");
    double worst = 0;
    for (size_t i = 0; i < draws; ++i) {
      RandomKb r = MakeRandomKb(rng, 10, 4);
      ModelBundle model = MakeRandomModel(r.vocab, {}, rng.NextU64());
      PromptSequence prompt = MakeRandomPrompt(model, r.kb, rng);
      TokenSeq answer = AnswerTokens(r.vocab, r.kb, r.kb.at(rng.UniformInt(r.kb.size())).id);
      Tape tape;
      const double loss = AnswerLossOnTape(tape, model, prompt, answer)->data[0];
      const double score = ScoreSequence(model, prompt, answer);
      worst = std::max(worst, std::abs(score + loss));
      if (std::abs(score + loss) > 1e-6) Fail("score_sequence differs from -loss");
    }
    std::ostringstream os;
    os << "uniform losses exact; " << draws << " draws, max |score + loss| " << worst;
    return os.str();
  });
}

CheckResult CheckRoundTrips(uint64_t seed) {
  return Timed("round_trips", [&]() {
    Rng rng = Rng::Stream(seed, "checks/roundtrip");
    RandomKb r = MakeRandomKb(rng, 30, 5);
    if (!(ParseKb(SerializeKb(r.kb)) == r.kb)) Fail("KB round trip");
    if (!(Vocabulary::FromJson(r.vocab.ToJson()) == r.vocab)) Fail("vocabulary round trip");
    EntityTrie trie = EntityTrie::Build(r.kb, r.vocab);
    if (!(EntityTrie::Deserialize(trie.Serialize()) == trie)) Fail("trie round trip");

    std::vector<std::string> refs = {"a", "b", "c"};
    std::vector<std::vector<double>> rows;
    for (size_t i = 0; i < refs.size(); ++i) {
      std::vector<double> row(4);
      for (double& v : row) v = static_cast<float>(rng.Normal());
      rows.push_back(row);
    }
    VisionFeatureStore store(4, refs, rows);
    VisionFeatureStore back = VisionFeatureStore::Deserialize(store.Serialize());
    for (const std::string& ref : refs) {
      if (back.Feature(ref) != store.Feature(ref)) Fail("feature file round trip");
    }

    ModelBundle model = MakeRandomModel(r.vocab, {}, rng.NextU64());
    PromptSequence prompt = MakeRandomPrompt(model, r.kb, rng);
    Checkpoint ckpt = Checkpoint::Deserialize(model.ToCheckpoint({}).Serialize());
    ModelBundle reloaded = ModelBundle::FromCheckpoint(ckpt, r.vocab, model.features);
    if (reloaded.lm.Logits(reloaded.EmbedSequence(prompt)).data !=
        model.lm.Logits(model.EmbedSequence(prompt)).data) {
      Fail("checkpoint reload changed the forward pass");
    }
    return std::string("kb, vocabulary, trie, features, checkpoint");
  });
}

std::vector<CheckResult> RunSelfTest(uint64_t seed, bool quick) {
  const size_t scale = quick ? 10 : 1;
  return {CheckTrieLanguage(200 / scale, seed),   CheckDecoderOracle(200 / scale, seed),
          CheckValidityFuzz(1000 / scale, seed),  CheckGradients(quick ? 3 : 20, seed),
          CheckBm25(100 / scale, seed),           CheckLossAnalytics(20 / scale, seed),
          CheckRoundTrips(seed)};
}

}  // namespace gemel
