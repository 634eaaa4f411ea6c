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

#include "gemel/retrieval.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gemel/errors.h"
#include "gemel/rng.h"
#include "gemel/unicode_text.h"

namespace gemel {

RetrievalMethod ParseRetrievalMethod(const std::string& name) {
  if (name == "random") return RetrievalMethod::kRandom;
  if (name == "bm25") return RetrievalMethod::kBm25;
  if (name == "dense") return RetrievalMethod::kDense;
  throw ValidationError("unknown retrieval method " + name);
}

const char* RetrievalMethodName(RetrievalMethod method) {
  switch (method) {
    case RetrievalMethod::kRandom:
      return "random";
    case RetrievalMethod::kBm25:
      return "bm25";
    case RetrievalMethod::kDense:
      return "dense";
  }
  return "?";
}

DemonstrationPool::DemonstrationPool(std::vector<MentionInstance> instances,
                                     bool bm25_with_context)
    : instances_(std::move(instances)), with_context_(bm25_with_context) {
  term_counts_.resize(instances_.size());
  doc_lengths_.resize(instances_.size());
  double total = 0;
  for (size_t i = 0; i < instances_.size(); ++i) {
    if (!id_index_.emplace(instances_[i].id, i).second) {
      throw ValidationError("duplicate instance id " + instances_[i].id + " in pool");
    }
    std::vector<std::string> doc = Document(instances_[i]);
    doc_lengths_[i] = doc.size();
    total += static_cast<double>(doc.size());
    for (const std::string& tok : doc) {
      if (term_counts_[i][tok]++ == 0) ++doc_freq_[tok];
    }
  }
  average_length_ = instances_.empty() ? 0.0 : total / static_cast<double>(instances_.size());
}

std::optional<size_t> DemonstrationPool::IndexOf(const std::string& id) const {
  auto it = id_index_.find(id);
  if (it == id_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> DemonstrationPool::Document(const MentionInstance& inst) const {
  std::vector<std::string> doc = Segment(inst.mention);
  if (with_context_) {
    std::vector<std::string> context = Segment(inst.text);
    doc.insert(doc.end(), context.begin(), context.end());
  }
  return doc;
}

size_t DemonstrationPool::document_frequency(const std::string& token) const {
  auto it = doc_freq_.find(token);
  return it == doc_freq_.end() ? 0 : it->second;
}

size_t DemonstrationPool::term_frequency(size_t doc, const std::string& token) const {
  auto it = term_counts_.at(doc).find(token);
  return it == term_counts_[doc].end() ? 0 : it->second;
}

double DemonstrationPool::Bm25Score(std::span<const std::string> query, size_t doc,
                                    const Bm25Params& params) const {
  const auto n = static_cast<double>(instances_.size());
  const double length_norm =
      average_length_ > 0
          ? 1.0 - params.b + params.b * static_cast<double>(doc_lengths_[doc]) / average_length_
          : 1.0;
  double score = 0.0;
  for (const std::string& token : query) {
    const auto tf = static_cast<double>(term_frequency(doc, token));
    if (tf == 0.0) continue;
    const auto df = static_cast<double>(document_frequency(token));
    const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    score += idf * (tf * (params.k1 + 1.0)) / (tf + params.k1 * length_norm);
  }
  return score;
}

std::vector<double> DemonstrationPool::Bm25Scores(std::span<const std::string> query,
                                                  const Bm25Params& params) const {
  std::vector<double> scores(instances_.size());
  for (size_t i = 0; i < scores.size(); ++i) scores[i] = Bm25Score(query, i, params);
  return scores;
}

std::vector<size_t> SelectRandom(const DemonstrationPool& pool, size_t n, uint64_t seed,
                                 std::optional<size_t> exclude) {
  std::vector<size_t> candidates;
  candidates.reserve(pool.size());
  for (size_t i = 0; i < pool.size(); ++i) {
    if (!exclude || *exclude != i) candidates.push_back(i);
  }
  if (candidates.size() < n) {
    throw ValidationError("demonstration pool has " + std::to_string(candidates.size()) +
                          " candidates, " + std::to_string(n) + " requested");
  }
  Rng rng(seed);
  // Partial Fisher-Yates: the first n slots are a uniform n-permutation.
  for (size_t i = 0; i < n; ++i) {
    std::swap(candidates[i], candidates[i + rng.UniformInt(candidates.size() - i)]);
  }
  candidates.resize(n);
  return candidates;
}

std::vector<ScoredDemo> SelectTopK(const DemonstrationPool& pool, std::span<const double> scores,
                                   size_t n, std::optional<size_t> exclude) {
  if (scores.size() != pool.size()) throw ValidationError("one score per pool entry required");
  std::vector<ScoredDemo> candidates;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (exclude && *exclude == i) continue;
    if (!std::isfinite(scores[i])) throw ValidationError("non-finite relevance score");
    candidates.push_back({i, scores[i]});
  }
  if (candidates.size() < n) {
    throw ValidationError("demonstration pool has " + std::to_string(candidates.size()) +
                          " candidates, " + std::to_string(n) + " requested");
  }
  auto id_of = [&](const ScoredDemo& d) -> const std::string& {
    return pool.instances()[d.index].id;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n),
                    candidates.end(), [&](const ScoredDemo& a, const ScoredDemo& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return id_of(a) < id_of(b);
                    });
  candidates.resize(n);
  std::sort(candidates.begin(), candidates.end(), [&](const ScoredDemo& a, const ScoredDemo& b) {
    if (a.score != b.score) return a.score < b.score;
    return id_of(a) < id_of(b);
  });
  return candidates;
}

double Cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ValidationError("cosine of vectors with different lengths");
  double dot = 0, nu = 0, nv = 0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw ValidationError("cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<double> EmbedMention(const ModelBundle& model, const MentionInstance& inst) {
  MentionTokens tokens = TokenizeWithMention(model.vocab, inst);
  if (tokens.begin == tokens.end) {
    throw ValidationError("instance " + inst.id + " has an empty mention");
  }
  Tensor hidden = model.lm.Hidden(model.lm.EmbedTokens(tokens.ids, 0));
  const size_t d = hidden.cols();
  std::vector<double> mean(d, 0.0);
  for (size_t r = tokens.begin; r < tokens.end; ++r) {
    for (size_t c = 0; c < d; ++c) mean[c] += hidden.data[r * d + c];
  }
  for (double& v : mean) v /= static_cast<double>(tokens.end - tokens.begin);
  return mean;
}

DemoRetriever::DemoRetriever(RetrievalConfig config,
                             std::shared_ptr<const DemonstrationPool> pool,
                             const ModelBundle* model, uint64_t seed)
    : config_(std::move(config)), pool_(std::move(pool)), model_(model), seed_(seed) {
  if (config_.method != RetrievalMethod::kDense || config_.n == 0) return;
  if (!config_.embeddings_path.empty()) {
    precomputed_ = std::make_shared<VisionFeatureStore>(
        VisionFeatureStore::Load(config_.embeddings_path));
    pool_embeddings_.reserve(pool_->size());
    for (const MentionInstance& inst : pool_->instances()) {
      pool_embeddings_.push_back(precomputed_->Feature(inst.id));
    }
    return;
  }
  if (model_ == nullptr) throw ValidationError("dense retrieval needs a model or embedding file");
  pool_embeddings_.resize(pool_->size());
  const auto count = static_cast<std::ptrdiff_t>(pool_->size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    pool_embeddings_[i] = EmbedMention(*model_, pool_->instances()[i]);
  }
}

std::vector<double> DemoRetriever::QueryEmbedding(const MentionInstance& query) const {
  if (precomputed_) return precomputed_->Feature(query.id);
  return EmbedMention(*model_, query);
}

std::vector<size_t> DemoRetriever::RetrieveIndices(const MentionInstance& query) const {
  if (config_.n == 0) return {};
  const std::optional<size_t> exclude = pool_->IndexOf(query.id);
  switch (config_.method) {
    case RetrievalMethod::kRandom:
      return SelectRandom(*pool_, config_.n,
                          Rng::DeriveSeed(seed_, "retrieval/random/" + query.id), exclude);
    case RetrievalMethod::kBm25: {
      std::vector<std::string> q = pool_->Document(query);
      std::vector<double> scores = pool_->Bm25Scores(q, config_.bm25);
      std::vector<size_t> out;
      for (const ScoredDemo& d : SelectTopK(*pool_, scores, config_.n, exclude)) {
        out.push_back(d.index);
      }
      return out;
    }
    case RetrievalMethod::kDense: {
      std::vector<double> q = QueryEmbedding(query);
      std::vector<double> scores(pool_->size());
      for (size_t i = 0; i < scores.size(); ++i) scores[i] = Cosine(q, pool_embeddings_[i]);
      std::vector<size_t> out;
      for (const ScoredDemo& d : SelectTopK(*pool_, scores, config_.n, exclude)) {
        out.push_back(d.index);
      }
      return out;
    }
  }
  return {};
}

std::vector<MentionInstance> DemoRetriever::Retrieve(const MentionInstance& query) const {
  std::vector<MentionInstance> demos;
  for (size_t i : RetrieveIndices(query)) demos.push_back(pool_->instances()[i]);
  return demos;
}

}  // namespace gemel
