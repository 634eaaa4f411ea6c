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

#ifndef GEMEL_KB_STORE_H_
#define GEMEL_KB_STORE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace gemel {

struct EntityRecord {
  std::string id;
  std::string name;  // normalized
  int64_t count = 0;

  bool operator==(const EntityRecord&) const = default;
};

// Immutable entity inventory with exact-match name and id indexes.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  // Normalizes every name; throws ValidationError on empty names, duplicate
  // ids, duplicate normalized names, or negative counts.
  explicit KnowledgeBase(std::vector<EntityRecord> entities);

  const std::vector<EntityRecord>& entities() const { return entities_; }
  size_t size() const { return entities_.size(); }
  bool empty() const { return entities_.empty(); }

  // Ordinal of the entity, or nullopt.
  std::optional<size_t> FindByName(const std::string& normalized_name) const;
  std::optional<size_t> FindById(const std::string& id) const;
  const EntityRecord& at(size_t ordinal) const { return entities_.at(ordinal); }

  bool operator==(const KnowledgeBase& other) const {
    return entities_ == other.entities_;
  }

 private:
  std::vector<EntityRecord> entities_;
  std::unordered_map<std::string, size_t> name_index_;
  std::unordered_map<std::string, size_t> id_index_;
};

// JSON-lines: {"id": string, "name": string, "count": integer?}.
KnowledgeBase LoadKb(const std::string& path);
KnowledgeBase ParseKb(const std::string& jsonl);
std::string SerializeKb(const KnowledgeBase& kb);
void SaveKb(const KnowledgeBase& kb, const std::string& path);

enum class TailRule {
  // count strictly below the nearest-rank percentile of the gold counts
  kPercentile,
  // count strictly below fraction * (sum of distinct gold entity counts)
  kTotalFraction,
};

struct OccurrenceSplit {
  std::unordered_set<std::string> common;
  std::unordered_set<std::string> tail;
  double threshold = 0;
};

// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value (1-based),
// clamped to rank 1. Requires a non-empty input and p in (0, 100].
int64_t NearestRankPercentile(std::vector<int64_t> values, double percentile);

// Splits the entities referenced by `gold_ids` into common and tail sets.
// `gold_ids` is treated as a multiset (one entry per evaluated mention).
// For kPercentile, `parameter` is the percentile in (0, 100); for
// kTotalFraction it is the fraction in (0, 1).
OccurrenceSplit OccurrencePartition(const KnowledgeBase& kb,
                                    std::span<const std::string> gold_ids,
                                    double parameter = 5.0,
                                    TailRule rule = TailRule::kPercentile);

}  // namespace gemel

#endif  // GEMEL_KB_STORE_H_
