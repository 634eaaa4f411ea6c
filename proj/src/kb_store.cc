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

#include "gemel/kb_store.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gemel/errors.h"
#include "gemel/unicode_text.h"
#include "json.hpp"

namespace gemel {

using json = nlohmann::json;

KnowledgeBase::KnowledgeBase(std::vector<EntityRecord> entities)
    : entities_(std::move(entities)) {
  for (size_t i = 0; i < entities_.size(); ++i) {
    EntityRecord& e = entities_[i];
    e.name = NormalizeName(e.name);
    if (e.id.empty()) {
      throw ValidationError("entity #" + std::to_string(i) + " has empty id");
    }
    if (e.name.empty()) {
      throw ValidationError("entity " + e.id + " has an empty name");
    }
    if (e.count < 0) {
      throw ValidationError("entity " + e.id + " has a negative count");
    }
    auto [id_it, id_new] = id_index_.emplace(e.id, i);
    if (!id_new) throw ValidationError("duplicate entity id " + e.id);
    auto [it, inserted] = name_index_.emplace(e.name, i);
    if (!inserted) {
      throw ValidationError("duplicate entity name \"" + e.name + "\" for ids " +
                            entities_[it->second].id + " and " + e.id);
    }
  }
}

std::optional<size_t> KnowledgeBase::FindByName(
    const std::string& normalized_name) const {
  auto it = name_index_.find(normalized_name);
  if (it == name_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<size_t> KnowledgeBase::FindById(const std::string& id) const {
  auto it = id_index_.find(id);
  if (it == id_index_.end()) return std::nullopt;
  return it->second;
}

KnowledgeBase ParseKb(const std::string& jsonl) {
  std::vector<EntityRecord> records;
  std::istringstream in(jsonl);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json obj = json::parse(line);
      EntityRecord r;
      r.id = obj.at("id").get<std::string>();
      r.name = obj.at("name").get<std::string>();
      if (obj.contains("count")) r.count = obj.at("count").get<int64_t>();
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ValidationError("KB line " + std::to_string(line_no) + ": " +
                            e.what());
    }
  }
  return KnowledgeBase(std::move(records));
}

KnowledgeBase LoadKb(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open KB file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseKb(buf.str());
}

std::string SerializeKb(const KnowledgeBase& kb) {
  std::string out;
  for (const EntityRecord& e : kb.entities()) {
    json obj = {{"id", e.id}, {"name", e.name}, {"count", e.count}};
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void SaveKb(const KnowledgeBase& kb, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write KB file " + path);
  out << SerializeKb(kb);
}

int64_t NearestRankPercentile(std::vector<int64_t> values, double percentile) {
  if (values.empty()) throw ValidationError("percentile of an empty set");
  if (!(percentile > 0 && percentile <= 100)) {
    throw ValidationError("percentile must be in (0, 100]");
  }
  std::sort(values.begin(), values.end());
  auto rank = static_cast<size_t>(
      std::ceil(percentile / 100.0 * static_cast<double>(values.size())));
  rank = std::clamp<size_t>(rank, 1, values.size());
  return values[rank - 1];
}

OccurrenceSplit OccurrencePartition(const KnowledgeBase& kb,
                                    std::span<const std::string> gold_ids,
                                    double parameter, TailRule rule) {
  std::vector<int64_t> counts;
  counts.reserve(gold_ids.size());
  for (const std::string& id : gold_ids) {
    auto ordinal = kb.FindById(id);
    if (!ordinal) throw ValidationError("unknown gold entity id " + id);
    counts.push_back(kb.at(*ordinal).count);
  }
  OccurrenceSplit split;
  if (gold_ids.empty()) return split;
  if (rule == TailRule::kPercentile) {
    if (!(parameter > 0 && parameter < 100)) {
      throw ValidationError("tail percentile must be in (0, 100)");
    }
    split.threshold = static_cast<double>(NearestRankPercentile(counts, parameter));
  } else {
    if (!(parameter > 0 && parameter < 1)) {
      throw ValidationError("tail fraction must be in (0, 1)");
    }
    std::unordered_set<std::string> seen;
    double total = 0;
    for (const std::string& id : gold_ids) {
      if (seen.insert(id).second) {
        total += static_cast<double>(kb.at(*kb.FindById(id)).count);
      }
    }
    split.threshold = parameter * total;
  }
  for (size_t i = 0; i < gold_ids.size(); ++i) {
    if (static_cast<double>(counts[i]) < split.threshold) {
      split.tail.insert(gold_ids[i]);
    } else {
      split.common.insert(gold_ids[i]);
    }
  }
  return split;
}

}  // namespace gemel
