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

#ifndef GEMEL_CONFIG_H_
#define GEMEL_CONFIG_H_

#include <cstdint>
#include <span>
#include <string>

#include "gemel/decoder.h"
#include "gemel/kb_store.h"
#include "gemel/model_bundle.h"
#include "gemel/prompt.h"
#include "gemel/retrieval.h"
#include "gemel/trainer.h"
#include "json.hpp"

namespace gemel {

struct RunPaths {
  std::string kb;
  std::string train;
  std::string dev;
  std::string test;
  std::string features;  // GMFV file; empty selects synthetic hash features
  std::string vocab;
  std::string trie;
  std::string lm_checkpoint;      // pretrained LM
  std::string mapper_checkpoint;  // trained mapper
  std::string output_dir;
};

// Effective configuration of one run: defaults, then the config file, then
// command-line overrides.
struct RunConfig {
  uint64_t seed = 0;
  RunPaths paths;
  ModelConfig model;
  RetrievalConfig retrieval;
  DecodeConfig decode;
  TrainConfig train;
  PretrainConfig pretrain;
  std::string pretrain_corpus = "text";
  PromptOptions prompt;
  double bias_percentile = 5.0;
  TailRule tail_rule = TailRule::kPercentile;

  // Full JSON form with every key present; this is the echo written into
  // output artifacts.
  nlohmann::json ToJson() const;
  // Throws ValidationError for unknown keys, wrong value types, or values
  // out of range.
  static RunConfig FromJson(const nlohmann::json& j);

  void Validate() const;
};

nlohmann::json DefaultConfigJson();

// Applies "a.b=value" overrides. The value is parsed as JSON when possible
// and taken as a string otherwise. Throws ValidationError for unknown keys
// or type mismatches.
void ApplyOverrides(nlohmann::json& config, std::span<const std::string> overrides);

// Defaults, overlaid with `path` (if non-empty) and the overrides.
RunConfig LoadRunConfig(const std::string& path, std::span<const std::string> overrides);

}  // namespace gemel

#endif  // GEMEL_CONFIG_H_
