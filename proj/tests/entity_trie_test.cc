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

#include <gtest/gtest.h>

#include <set>

#include "gemel/binary_io.h"
#include "gemel/checks.h"
#include "gemel/errors.h"
#include "gemel/rng.h"
#include "test_util.h"

namespace gemel {
namespace {

using testing::Ids;
using testing::MakeKb;

TEST(EntityTrieTest, SharedPrefixStructure) {
  KnowledgeBase kb = MakeKb({"a b", "a c"});
  Vocabulary v = BuildVocab({}, kb);
  EntityTrie trie = EntityTrie::Build(kb, v);
  EXPECT_EQ(trie.node_count(), 4u);
  EXPECT_EQ(trie.AllowedContinuations({}), TokenSeq{v.Lookup("a")});
  EXPECT_EQ(trie.AllowedContinuations(Ids(v, "a")), (TokenSeq{v.Lookup("b"), v.Lookup("c")}));
  EXPECT_EQ(trie.AllowedContinuations(Ids(v, "a b")), TokenSeq{special::kEos});
}

TEST(EntityTrieTest, NameThatPrefixesAnother) {
  KnowledgeBase kb = MakeKb({"a", "a b"});
  Vocabulary v = BuildVocab({}, kb);
  EntityTrie trie = EntityTrie::Build(kb, v);
  EXPECT_EQ(trie.node_count(), 3u);
  auto node = trie.Walk(Ids(v, "a"));
  ASSERT_TRUE(node.has_value());
  EXPECT_TRUE(trie.nodes()[*node].terminal());
  EXPECT_EQ(trie.AllowedContinuations(Ids(v, "a")), (TokenSeq{special::kEos, v.Lookup("b")}));
  EXPECT_EQ(trie.Resolve(Ids(v, "a")), 0u);
  EXPECT_EQ(trie.Resolve(Ids(v, "a b")), 1u);
}

TEST(EntityTrieTest, SingleEntity) {
  KnowledgeBase kb = MakeKb({"x"});
  Vocabulary v = BuildVocab({}, kb);
  EntityTrie trie = EntityTrie::Build(kb, v);
  EXPECT_EQ(trie.AllowedContinuations({}), TokenSeq{v.Lookup("x")});
}

TEST(EntityTrieTest, HarryPotterBranches) {
  KnowledgeBase kb = MakeKb({"harry potter ( film series )", "harry potter ( novel series )"});
  Vocabulary v = BuildVocab({}, kb);
  EntityTrie trie = EntityTrie::Build(kb, v);
  // Brute force: tokens that follow the prefix in some name.
  const TokenSeq prefix = Ids(v, "harry potter (");
  std::set<TokenId> expected;
  for (const auto& e : kb.entities()) {
    TokenSeq ids = Ids(v, e.name);
    if (std::equal(prefix.begin(), prefix.end(), ids.begin())) expected.insert(ids[prefix.size()]);
  }
  TokenSeq allowed = trie.AllowedContinuations(prefix);
  EXPECT_EQ(std::set<TokenId>(allowed.begin(), allowed.end()), expected);
  EXPECT_EQ(expected, (std::set<TokenId>{v.Lookup("film"), v.Lookup("novel")}));
}

TEST(EntityTrieTest, ResolveExamples) {
  KnowledgeBase kb = MakeKb({"a b", "a c"});
  Vocabulary v = BuildVocab(std::vector<std::string>{"z"}, kb);
  EntityTrie trie = EntityTrie::Build(kb, v);
  EXPECT_EQ(trie.Resolve(Ids(v, "a b")), 0u);
  EXPECT_FALSE(trie.Resolve(Ids(v, "a")).has_value());
  EXPECT_FALSE(trie.Resolve(Ids(v, "z")).has_value());
  EXPECT_TRUE(trie.AllowedContinuations(Ids(v, "z")).empty());
}

TEST(EntityTrieTest, BuildErrors) {
  KnowledgeBase kb = MakeKb({"a b"});
  EXPECT_THROW(EntityTrie::Build(KnowledgeBase(), BuildVocab({}, kb)), ValidationError);
  Vocabulary small = BuildVocab({}, MakeKb({"a"}));
  EXPECT_THROW(EntityTrie::Build(kb, small), ValidationError);
  // Different strings with one token sequence.
  KnowledgeBase clash = MakeKb({"a(b", "a ( b"});
  EXPECT_THROW(EntityTrie::Build(clash, BuildVocab({}, clash)), ValidationError);
}

TEST(EntityTrieTest, SerializationRoundTripAndCorruption) {
  KnowledgeBase kb = MakeKb({"a b", "a c", "d", "d e f"});
  Vocabulary v = BuildVocab({}, kb);
  EntityTrie trie = EntityTrie::Build(kb, v);
  const std::string bytes = trie.Serialize();
  EXPECT_EQ(EntityTrie::Deserialize(bytes), trie);
  EXPECT_EQ(bytes.substr(0, 4), "GMTR");

  EXPECT_THROW(EntityTrie::Deserialize(bytes.substr(0, bytes.size() - 3)), ValidationError);
  try {
    EntityTrie::Deserialize(bytes.substr(0, bytes.size() / 2));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos) << e.what();
  }
  std::string flipped = bytes;
  flipped[20] ^= 1;
  EXPECT_THROW(EntityTrie::Deserialize(flipped), ValidationError);

  // Bad magic with a valid checksum.
  std::string payload = bytes.substr(0, bytes.size() - 4);
  payload[0] = 'X';
  ByteWriter w;
  w.PutBytes(payload);
  w.PutCrc32();
  try {
    EntityTrie::Deserialize(w.buffer());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
  }
  // Wrong version with a valid checksum.
  payload = bytes.substr(0, bytes.size() - 4);
  payload[4] = 2;
  ByteWriter w2;
  w2.PutBytes(payload);
  w2.PutCrc32();
  EXPECT_THROW(EntityTrie::Deserialize(w2.buffer()), ValidationError);

  testing::TempDir dir;
  trie.Save(dir.File("t.trie"));
  EXPECT_EQ(EntityTrie::Load(dir.File("t.trie")), trie);
  EXPECT_THROW(EntityTrie::Load(dir.File("missing.trie")), IoError);
}

// Collects every accepted sequence by DFS over allowed continuations.
void Enumerate(const EntityTrie& trie, TokenSeq& prefix, std::vector<TokenSeq>& out) {
  for (TokenId t : trie.AllowedContinuations(prefix)) {
    if (t == special::kEos) {
      out.push_back(prefix);
      continue;
    }
    prefix.push_back(t);
    Enumerate(trie, prefix, out);
    prefix.pop_back();
  }
}

TEST(EntityTrieProperty, LanguageEqualsKbNames) {
  Rng rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    RandomKb r = MakeRandomKb(rng, 30, 5);
    EntityTrie trie = EntityTrie::Build(r.kb, r.vocab);
    std::vector<TokenSeq> accepted;
    TokenSeq prefix;
    Enumerate(trie, prefix, accepted);
    std::set<std::string> names;
    for (const TokenSeq& ids : accepted) {
      auto ordinal = trie.Resolve(ids);
      ASSERT_TRUE(ordinal.has_value());
      EXPECT_EQ(Detokenize(r.vocab, ids), r.kb.at(*ordinal).name);
      names.insert(Detokenize(r.vocab, ids));
    }
    EXPECT_EQ(accepted.size(), r.kb.size());
    EXPECT_EQ(names.size(), r.kb.size());
    size_t total_tokens = 0;
    for (const auto& e : r.kb.entities()) {
      TokenSeq ids = Tokenize(r.vocab, e.name);
      total_tokens += ids.size();
      for (size_t i = 0; i < ids.size(); ++i) {
        TokenSeq allowed = trie.AllowedContinuations(std::span(ids).first(i));
        EXPECT_TRUE(std::binary_search(allowed.begin(), allowed.end(), ids[i]) ||
                    std::find(allowed.begin(), allowed.end(), ids[i]) != allowed.end());
      }
      TokenSeq at_end = trie.AllowedContinuations(ids);
      EXPECT_NE(std::find(at_end.begin(), at_end.end(), special::kEos), at_end.end());
    }
    EXPECT_LE(trie.node_count(), 1 + total_tokens);
    for (const auto& node : trie.nodes()) {
      for (size_t i = 1; i < node.children.size(); ++i) {
        EXPECT_LT(node.children[i - 1].first, node.children[i].first);
      }
    }
    EXPECT_EQ(EntityTrie::Deserialize(trie.Serialize()), trie);
  }
}

}  // namespace
}  // namespace gemel
