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

#ifndef GEMEL_EVALUATOR_H_
#define GEMEL_EVALUATOR_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gemel/decoder.h"
#include "gemel/entity_trie.h"
#include "gemel/kb_store.h"
#include "gemel/model_bundle.h"
#include "gemel/prompt.h"
#include "gemel/retrieval.h"
#include "json.hpp"

namespace gemel {

// One line of a predictions file.
struct Prediction {
  std::string id;
  std::string pred;     // entity name
  std::string pred_id;  // entity id
  double logprob = 0;
  std::vector<std::pair<std::string, double>> topk;  // (name, logprob)

  nlohmann::json ToJson() const;
  static Prediction FromJson(const nlohmann::json& j);
};

std::string SerializePredictions(std::span<const Prediction> preds);
std::vector<Prediction> ParsePredictions(const std::string& jsonl);
std::vector<Prediction> LoadPredictions(const std::string& path);
void SavePredictions(std::span<const Prediction> preds, const std::string& path);

// Fraction of positions where the ids agree. Throws ValidationError on
// empty or unequal-length inputs.
double Top1Accuracy(std::span<const std::string> preds, std::span<const std::string> golds);

struct InstanceResult {
  std::string id;
  std::string gold;  // entity id
  std::string pred;  // entity id
  bool correct = false;
  std::string bucket;  // "common" or "tail", filled by BiasReport
};

struct BucketStats {
  size_t n = 0;
  size_t correct = 0;
  // Absent for an empty bucket.
  std::optional<double> accuracy() const;
};

struct EvalReport {
  std::string variant;
  size_t n = 0;
  size_t correct = 0;
  double overall_acc = 0;
  double threshold = 0;
  BucketStats common;
  BucketStats tail;
  nlohmann::json config = nlohmann::json::object();
  std::vector<InstanceResult> instances;

  nlohmann::json ToJson() const;
  // Pretty-printed, byte-reproducible.
  std::string Dump() const;
};

// Partitions the gold entities by corpus occurrence and scores each bucket.
// Throws ValidationError on an unknown gold id or an empty result list.
EvalReport BiasReport(std::vector<InstanceResult> results, const KnowledgeBase& kb,
                      double percentile, TailRule rule = TailRule::kPercentile);

// Joins predictions with gold instances by id.
std::vector<InstanceResult> MatchPredictions(std::span<const Prediction> preds,
                                             std::span<const MentionInstance> gold);

// Tab-separated table, one row per report.
std::string SummaryTable(std::span<const EvalReport> reports);

enum class Variant { kFull, kNoVisual, kNoIcl };
Variant ParseVariant(const std::string& name);
const char* VariantName(Variant variant);
PromptOptions ApplyVariant(PromptOptions options, Variant variant);

// Everything needed to link a mention.
struct LinkingContext {
  const ModelBundle* model = nullptr;
  const KnowledgeBase* kb = nullptr;
  const EntityTrie* trie = nullptr;
  const DemoRetriever* retriever = nullptr;  // null means no demonstrations
  PromptOptions prompt;
  DecodeConfig decode;
};

PromptSequence BuildPrompt(const LinkingContext& ctx, const MentionInstance& inst);
Prediction LinkOne(const LinkingContext& ctx, const MentionInstance& inst);
// Links every instance, in parallel across at most WorkerCount() threads;
// output order follows the input.
std::vector<Prediction> LinkAll(const LinkingContext& ctx,
                                std::span<const MentionInstance> instances);

// GEMEL_THREADS if set and positive, otherwise the OpenMP default.
size_t WorkerCount();

EvalReport RunAblation(const LinkingContext& ctx, Variant variant,
                       std::span<const MentionInstance> instances, double percentile);

}  // namespace gemel

#endif  // GEMEL_EVALUATOR_H_
