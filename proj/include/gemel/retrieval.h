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

#ifndef GEMEL_RETRIEVAL_H_
#define GEMEL_RETRIEVAL_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gemel/model_bundle.h"
#include "gemel/prompt.h"
#include "gemel/vision.h"

namespace gemel {

enum class RetrievalMethod { kRandom, kBm25, kDense };

RetrievalMethod ParseRetrievalMethod(const std::string& name);
const char* RetrievalMethodName(RetrievalMethod method);

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
};

struct RetrievalConfig {
  RetrievalMethod method = RetrievalMethod::kDense;
  size_t n = 16;
  Bm25Params bm25;
  // BM25 documents are mention surface forms; when set, the mention's
  // sentence is appended.
  bool bm25_with_context = false;
  // Optional GMFV file of precomputed mention embeddings keyed by instance
  // id, used instead of the language model for dense retrieval.
  std::string embeddings_path;
};

// Training-split instances plus the BM25 statistics over their documents.
class DemonstrationPool {
 public:
  DemonstrationPool() = default;
  explicit DemonstrationPool(std::vector<MentionInstance> instances,
                             bool bm25_with_context = false);

  const std::vector<MentionInstance>& instances() const { return instances_; }
  size_t size() const { return instances_.size(); }
  std::optional<size_t> IndexOf(const std::string& id) const;

  // BM25 document for an instance (also how queries are tokenized).
  std::vector<std::string> Document(const MentionInstance& inst) const;

  size_t doc_length(size_t doc) const { return doc_lengths_[doc]; }
  double average_doc_length() const { return average_length_; }
  size_t document_frequency(const std::string& token) const;
  size_t term_frequency(size_t doc, const std::string& token) const;

  // Okapi BM25 of `query` against one document.
  double Bm25Score(std::span<const std::string> query, size_t doc,
                   const Bm25Params& params = {}) const;
  std::vector<double> Bm25Scores(std::span<const std::string> query,
                                 const Bm25Params& params = {}) const;

 private:
  std::vector<MentionInstance> instances_;
  bool with_context_ = false;
  std::unordered_map<std::string, size_t> id_index_;
  std::vector<std::unordered_map<std::string, size_t>> term_counts_;
  std::vector<size_t> doc_lengths_;
  std::unordered_map<std::string, size_t> doc_freq_;
  double average_length_ = 0;
};

// Pool indices of n distinct instances in seed-determined order, skipping
// `exclude`. Throws ValidationError when the pool is too small.
std::vector<size_t> SelectRandom(const DemonstrationPool& pool, size_t n, uint64_t seed,
                                 std::optional<size_t> exclude = std::nullopt);

struct ScoredDemo {
  size_t index = 0;
  double score = 0;
};

// The n highest-scoring pool entries, returned in ascending score order so
// the most relevant one ends up next to the query. Ties prefer (and are
// ordered by) ascending instance id.
std::vector<ScoredDemo> SelectTopK(const DemonstrationPool& pool, std::span<const double> scores,
                                   size_t n, std::optional<size_t> exclude = std::nullopt);

// Throws ValidationError for zero vectors or mismatched lengths.
double Cosine(std::span<const double> u, std::span<const double> v);

// Mean of the frozen LM's final hidden states over the mention tokens, with
// the mention encoded inside its sentence.
std::vector<double> EmbedMention(const ModelBundle& model, const MentionInstance& inst);

// Demonstration selection for a configured method. Dense embeddings of the
// pool are computed once at construction.
class DemoRetriever {
 public:
  DemoRetriever(RetrievalConfig config, std::shared_ptr<const DemonstrationPool> pool,
                const ModelBundle* model, uint64_t seed);

  // Demonstrations for `query` in prompt order (ascending relevance).
  std::vector<MentionInstance> Retrieve(const MentionInstance& query) const;
  std::vector<size_t> RetrieveIndices(const MentionInstance& query) const;

  const RetrievalConfig& config() const { return config_; }

 private:
  std::vector<double> QueryEmbedding(const MentionInstance& query) const;

  RetrievalConfig config_;
  std::shared_ptr<const DemonstrationPool> pool_;
  const ModelBundle* model_;
  uint64_t seed_;
  std::vector<std::vector<double>> pool_embeddings_;
  std::shared_ptr<const VisionFeatureStore> precomputed_;
};

}  // namespace gemel

#endif  // GEMEL_RETRIEVAL_H_
