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

#include "gemel/config.h"

#include "gemel/binary_io.h"
#include "gemel/errors.h"

namespace gemel {

using nlohmann::json;

namespace {

const char* TailRuleName(TailRule rule) {
  return rule == TailRule::kPercentile ? "percentile" : "total_fraction";
}

TailRule ParseTailRule(const std::string& name) {
  if (name == "percentile") return TailRule::kPercentile;
  if (name == "total_fraction") return TailRule::kTotalFraction;
  throw ValidationError("unknown tail rule " + name);
}

json TrainJson(const TrainConfig& t) {
  return {{"lr", t.lr},
          {"warmup_ratio", t.warmup_ratio},
          {"epochs", t.epochs},
          {"grad_accum", t.grad_accum},
          {"batch", t.batch},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"eps", t.eps},
          {"weight_decay", t.weight_decay},
          {"linear_decay", t.linear_decay},
          {"max_steps", t.max_steps},
          {"clip_norm", t.clip_norm}};
}

TrainConfig TrainFromJson(const json& j) {
  TrainConfig t;
  t.lr = j.at("lr").get<double>();
  t.warmup_ratio = j.at("warmup_ratio").get<double>();
  t.epochs = j.at("epochs").get<size_t>();
  t.grad_accum = j.at("grad_accum").get<size_t>();
  t.batch = j.at("batch").get<size_t>();
  t.beta1 = j.at("beta1").get<double>();
  t.beta2 = j.at("beta2").get<double>();
  t.eps = j.at("eps").get<double>();
  t.weight_decay = j.at("weight_decay").get<double>();
  t.linear_decay = j.at("linear_decay").get<bool>();
  t.max_steps = j.at("max_steps").get<size_t>();
  t.clip_norm = j.at("clip_norm").get<double>();
  return t;
}

bool SameKind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) {
    // Integers may not silently become fractional.
    return !(a.is_number_integer() && b.is_number_float());
  }
  return a.type() == b.type();
}

// Every key of `given` must exist in `schema` with a compatible type.
void CheckAgainst(const json& schema, const json& given, const std::string& where) {
  if (!given.is_object()) throw ValidationError("config section " + where + " must be an object");
  for (const auto& [key, value] : given.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!schema.contains(key)) throw ValidationError("unknown config key " + path);
    const json& expected = schema.at(key);
    if (expected.is_object()) {
      CheckAgainst(expected, value, path);
    } else if (!SameKind(expected, value)) {
      throw ValidationError("config key " + path + " expects a " +
                            std::string(expected.type_name()) + ", got " + value.dump());
    }
  }
}

}  // namespace

json RunConfig::ToJson() const {
  json model_json = model.ToJson();
  return {
      {"seed", seed},
      {"paths",
       {{"kb", paths.kb},
        {"train", paths.train},
        {"dev", paths.dev},
        {"test", paths.test},
        {"features", paths.features},
        {"vocab", paths.vocab},
        {"trie", paths.trie},
        {"lm_checkpoint", paths.lm_checkpoint},
        {"mapper_checkpoint", paths.mapper_checkpoint},
        {"output_dir", paths.output_dir}}},
      {"model", model_json},
      {"retrieval",
       {{"method", RetrievalMethodName(retrieval.method)},
        {"n", retrieval.n},
        {"k1", retrieval.bm25.k1},
        {"b", retrieval.bm25.b},
        {"with_context", retrieval.bm25_with_context},
        {"embeddings", retrieval.embeddings_path}}},
      {"decode",
       {{"beam", decode.beam},
        {"max_answer_len", decode.max_answer_len},
        {"length_normalize", decode.length_normalize}}},
      {"prompt", {{"use_visual", prompt.use_visual}, {"use_icl", prompt.use_icl}}},
      {"train", TrainJson(train)},
      {"pretrain",
       {{"optim", TrainJson(pretrain.optim)},
        {"window", pretrain.window},
        {"stride", pretrain.stride},
        {"packed", pretrain.packed},
        {"corpus", pretrain_corpus}}},
      {"eval", {{"bias_percentile", bias_percentile}, {"tail_rule", TailRuleName(tail_rule)}}},
  };
}

json DefaultConfigJson() { return RunConfig{}.ToJson(); }

RunConfig RunConfig::FromJson(const json& given) {
  const json defaults = DefaultConfigJson();
  CheckAgainst(defaults, given, "");
  json j = defaults;
  j.merge_patch(given);
  RunConfig c;
  try {
    c.seed = j.at("seed").get<uint64_t>();
    const json& p = j.at("paths");
    c.paths.kb = p.at("kb");
    c.paths.train = p.at("train");
    c.paths.dev = p.at("dev");
    c.paths.test = p.at("test");
    c.paths.features = p.at("features");
    c.paths.vocab = p.at("vocab");
    c.paths.trie = p.at("trie");
    c.paths.lm_checkpoint = p.at("lm_checkpoint");
    c.paths.mapper_checkpoint = p.at("mapper_checkpoint");
    c.paths.output_dir = p.at("output_dir");
    c.model = ModelConfig::FromJson(j.at("model"));
    const json& r = j.at("retrieval");
    c.retrieval.method = ParseRetrievalMethod(r.at("method"));
    c.retrieval.n = r.at("n").get<size_t>();
    c.retrieval.bm25.k1 = r.at("k1").get<double>();
    c.retrieval.bm25.b = r.at("b").get<double>();
    c.retrieval.bm25_with_context = r.at("with_context").get<bool>();
    c.retrieval.embeddings_path = r.at("embeddings");
    const json& d = j.at("decode");
    c.decode.beam = d.at("beam").get<size_t>();
    c.decode.max_answer_len = d.at("max_answer_len").get<size_t>();
    c.decode.length_normalize = d.at("length_normalize").get<bool>();
    c.prompt.use_visual = j.at("prompt").at("use_visual").get<bool>();
    c.prompt.use_icl = j.at("prompt").at("use_icl").get<bool>();
    c.prompt.prefix_len = c.model.prefix_len;
    c.train = TrainFromJson(j.at("train"));
    const json& pt = j.at("pretrain");
    c.pretrain.optim = TrainFromJson(pt.at("optim"));
    c.pretrain.window = pt.at("window").get<size_t>();
    c.pretrain.stride = pt.at("stride").get<size_t>();
    c.pretrain.packed = pt.at("packed").get<bool>();
    c.pretrain_corpus = pt.at("corpus");
    c.bias_percentile = j.at("eval").at("bias_percentile").get<double>();
    c.tail_rule = ParseTailRule(j.at("eval").at("tail_rule"));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("bad config: ") + e.what());
  }
  c.Validate();
  return c;
}

void RunConfig::Validate() const {
  const size_t k = model.prefix_len;
  if (k != 1 && k != 2 && k != 4 && k != 8) {
    throw ValidationError("model.k must be one of 1, 2, 4, 8");
  }
  if (model.d_v == 0 || model.lm.d_model == 0 || model.lm.layers == 0 || model.lm.heads == 0) {
    throw ValidationError("model dimensions must be positive");
  }
  if (model.lm.d_model % model.lm.heads != 0) {
    throw ValidationError("model.d_t must be divisible by model.heads");
  }
  if (model.lm.max_len < 2) throw ValidationError("model.max_len must be at least 2");
  if (decode.beam == 0) throw ValidationError("decode.beam must be at least 1");
  if (decode.max_answer_len == 0) throw ValidationError("decode.max_answer_len must be positive");
  if (!(bias_percentile > 0 && bias_percentile <= 100) && tail_rule == TailRule::kPercentile) {
    throw ValidationError("eval.bias_percentile must lie in (0, 100]");
  }
  if (retrieval.bm25.k1 < 0 || retrieval.bm25.b < 0 || retrieval.bm25.b > 1) {
    throw ValidationError("bm25 parameters out of range");
  }
  if (pretrain_corpus != "text" && pretrain_corpus != "prompts") {
    throw ValidationError("pretrain.corpus must be text or prompts");
  }
  train.Validate();
  pretrain.optim.Validate();
}

void ApplyOverrides(json& config, std::span<const std::string> overrides) {
  const json defaults = DefaultConfigJson();
  for (const std::string& item : overrides) {
    const size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ValidationError("override must look like key.path=value: " + item);
    }
    const std::string key = item.substr(0, eq);
    const std::string raw = item.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    json::json_pointer ptr;
    size_t start = 0;
    while (true) {
      const size_t dot = key.find('.', start);
      ptr /= key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    if (!defaults.contains(ptr) || defaults.at(ptr).is_object()) {
      throw ValidationError("unknown config key " + key);
    }
    const json& expected = defaults.at(ptr);
    if (expected.is_string() && !value.is_string()) value = raw;
    if (!SameKind(expected, value)) {
      throw ValidationError("config key " + key + " expects a " +
                            std::string(expected.type_name()) + ", got " + raw);
    }
    config[ptr] = value;
  }
}

RunConfig LoadRunConfig(const std::string& path, std::span<const std::string> overrides) {
  json j = json::object();
  if (!path.empty()) {
    j = json::parse(ReadFileBytes(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ValidationError("config file " + path + " is not a JSON object");
    }
    // Accept an echoed run config embedded in an artifact.
    if (j.contains("effective_config")) j = j.at("effective_config");
  }
  ApplyOverrides(j, overrides);
  return RunConfig::FromJson(j);
}

}  // namespace gemel
