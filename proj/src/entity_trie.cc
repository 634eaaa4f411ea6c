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

#include "gemel/entity_trie.h"

#include <algorithm>
#include <map>
#include <memory>

#include "gemel/binary_io.h"
#include "gemel/errors.h"

namespace gemel {
namespace {

constexpr char kMagic[] = "GMTR";
constexpr uint32_t kVersion = 1;

struct BuildNode {
  uint32_t entity = EntityTrie::kNoEntity;
  std::map<TokenId, std::unique_ptr<BuildNode>> children;
};

void Flatten(const BuildNode& node, std::vector<EntityTrie::Node>* out) {
  const size_t self = out->size();
  out->emplace_back();
  (*out)[self].entity = node.entity;
  for (const auto& [token, child] : node.children) {
    const auto child_index = static_cast<EntityTrie::NodeIndex>(out->size());
    (*out)[self].children.emplace_back(token, child_index);
    Flatten(*child, out);
  }
}

}  // namespace

EntityTrie EntityTrie::Build(const KnowledgeBase& kb, const Vocabulary& vocab) {
  if (kb.empty()) throw ValidationError("cannot build a trie from an empty KB");
  BuildNode root;
  for (size_t i = 0; i < kb.size(); ++i) {
    const EntityRecord& e = kb.at(i);
    TokenSeq ids = Tokenize(vocab, e.name);
    if (ids.empty()) throw ValidationError("entity " + e.id + " has no tokens");
    if (std::find(ids.begin(), ids.end(), special::kUnk) != ids.end()) {
      throw ValidationError("entity name \"" + e.name + "\" (" + e.id +
                            ") contains out-of-vocabulary tokens");
    }
    BuildNode* node = &root;
    for (TokenId t : ids) {
      auto& slot = node->children[t];
      if (!slot) slot = std::make_unique<BuildNode>();
      node = slot.get();
    }
    if (node->entity != kNoEntity) {
      throw ValidationError("entities " + kb.at(node->entity).id + " and " + e.id +
                            " tokenize to the same sequence");
    }
    node->entity = static_cast<uint32_t>(i);
  }
  EntityTrie trie;
  trie.vocab_size_ = static_cast<uint32_t>(vocab.size());
  Flatten(root, &trie.nodes_);
  return trie;
}

std::optional<EntityTrie::NodeIndex> EntityTrie::Step(NodeIndex node,
                                                      TokenId token) const {
  const auto& children = nodes_.at(node).children;
  auto it = std::lower_bound(
      children.begin(), children.end(), token,
      [](const std::pair<TokenId, NodeIndex>& edge, TokenId t) { return edge.first < t; });
  if (it == children.end() || it->first != token) return std::nullopt;
  return it->second;
}

std::optional<EntityTrie::NodeIndex> EntityTrie::Walk(
    std::span<const TokenId> prefix) const {
  if (nodes_.empty()) return std::nullopt;
  NodeIndex node = kRoot;
  for (TokenId t : prefix) {
    auto next = Step(node, t);
    if (!next) return std::nullopt;
    node = *next;
  }
  return node;
}

std::vector<TokenId> EntityTrie::AllowedAt(NodeIndex node) const {
  const Node& n = nodes_.at(node);
  std::vector<TokenId> allowed;
  allowed.reserve(n.children.size() + 1);
  for (const auto& edge : n.children) allowed.push_back(edge.first);
  if (n.terminal()) {
    allowed.insert(std::lower_bound(allowed.begin(), allowed.end(), special::kEos),
                   special::kEos);
  }
  return allowed;
}

std::vector<TokenId> EntityTrie::AllowedContinuations(
    std::span<const TokenId> prefix) const {
  auto node = Walk(prefix);
  if (!node) return {};
  return AllowedAt(*node);
}

std::optional<uint32_t> EntityTrie::Resolve(std::span<const TokenId> ids) const {
  auto node = Walk(ids);
  if (!node || !nodes_[*node].terminal()) return std::nullopt;
  return nodes_[*node].entity;
}

std::string EntityTrie::Serialize() const {
  ByteWriter w;
  w.PutBytes(std::string_view(kMagic, 4));
  w.PutU32(kVersion);
  w.PutU32(vocab_size_);
  w.PutU64(nodes_.size());
  for (const Node& n : nodes_) {
    w.PutU32(n.entity);
    w.PutU32(static_cast<uint32_t>(n.children.size()));
    for (const auto& [token, child] : n.children) {
      w.PutU32(token);
      w.PutU64(child);
    }
  }
  w.PutCrc32();
  return w.buffer();
}

EntityTrie EntityTrie::Deserialize(std::string_view bytes) {
  if (bytes.size() < 8 || bytes.substr(0, 4) != std::string_view(kMagic, 4)) {
    throw ValidationError("trie file: bad magic (version mismatch)");
  }
  {
    ByteReader header(bytes.substr(4, 4));
    uint32_t version = header.GetU32();
    if (version != kVersion) {
      throw ValidationError("trie file: unsupported version " + std::to_string(version));
    }
  }
  std::string_view payload = VerifyTrailingCrc32(bytes, "trie file");
  ByteReader r(payload);
  r.Seek(8);
  EntityTrie trie;
  trie.vocab_size_ = r.GetU32();
  const uint64_t count = r.GetU64();
  if (count == 0 || count > payload.size()) {
    throw ValidationError("trie file: implausible node count");
  }
  trie.nodes_.resize(count);
  for (uint64_t i = 0; i < count; ++i) {
    Node& n = trie.nodes_[i];
    n.entity = r.GetU32();
    const uint32_t children = r.GetU32();
    if (children > r.remaining() / 12) throw ValidationError("trie file: truncated node");
    n.children.reserve(children);
    TokenId previous = 0;
    for (uint32_t c = 0; c < children; ++c) {
      TokenId token = r.GetU32();
      NodeIndex child = r.GetU64();
      if (child <= i || child >= count || token >= trie.vocab_size_ ||
          (c > 0 && token <= previous)) {
        throw ValidationError("trie file: malformed child edge at node " +
                              std::to_string(i));
      }
      previous = token;
      n.children.emplace_back(token, child);
    }
  }
  if (r.remaining() != 0) throw ValidationError("trie file: trailing bytes");
  return trie;
}

void EntityTrie::Save(const std::string& path) const {
  WriteFileBytes(path, Serialize());
}

EntityTrie EntityTrie::Load(const std::string& path) {
  return Deserialize(ReadFileBytes(path));
}

}  // namespace gemel
