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

#ifndef GEMEL_ENTITY_TRIE_H_
#define GEMEL_ENTITY_TRIE_H_

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gemel/kb_store.h"
#include "gemel/tokenizer.h"

namespace gemel {

// Token-level prefix trie over the tokenized names of every KB entity.
// Nodes are stored in pre-order with children sorted by token id; node 0 is
// the root (empty prefix). Completion is a terminal flag rather than an EOS
// edge, so a node can be terminal and still have children.
class EntityTrie {
 public:
  static constexpr uint32_t kNoEntity = std::numeric_limits<uint32_t>::max();
  using NodeIndex = uint64_t;

  struct Node {
    uint32_t entity = kNoEntity;  // KB ordinal when terminal
    std::vector<std::pair<TokenId, NodeIndex>> children;

    bool terminal() const { return entity != kNoEntity; }
    bool operator==(const Node&) const = default;
  };

  // Throws ValidationError for an empty KB, a name that tokenizes to UNK
  // or to nothing, and two names sharing one token sequence.
  static EntityTrie Build(const KnowledgeBase& kb, const Vocabulary& vocab);

  static constexpr NodeIndex kRoot = 0;

  // Follows one edge; nullopt when absent.
  std::optional<NodeIndex> Step(NodeIndex node, TokenId token) const;
  // Walks `prefix` from the root; nullopt for a dead prefix.
  std::optional<NodeIndex> Walk(std::span<const TokenId> prefix) const;

  // Child edge labels in ascending order, plus EOS when the node is
  // terminal. Empty for a dead prefix.
  std::vector<TokenId> AllowedContinuations(std::span<const TokenId> prefix) const;
  std::vector<TokenId> AllowedAt(NodeIndex node) const;

  // KB ordinal iff `ids` traces root -> terminal exactly.
  std::optional<uint32_t> Resolve(std::span<const TokenId> ids) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  size_t node_count() const { return nodes_.size(); }
  uint32_t vocab_size() const { return vocab_size_; }

  // "GMTR" format: magic, u32 version, u32 vocab size, u64 node count,
  // pre-order node records, trailing CRC32; little-endian throughout.
  std::string Serialize() const;
  static EntityTrie Deserialize(std::string_view bytes);
  void Save(const std::string& path) const;
  static EntityTrie Load(const std::string& path);

  bool operator==(const EntityTrie& other) const {
    return vocab_size_ == other.vocab_size_ && nodes_ == other.nodes_;
  }

 private:
  uint32_t vocab_size_ = 0;
  std::vector<Node> nodes_;
};

}  // namespace gemel

#endif  // GEMEL_ENTITY_TRIE_H_
