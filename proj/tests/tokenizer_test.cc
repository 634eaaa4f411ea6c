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

#include "gemel/tokenizer.h"

#include <gtest/gtest.h>

#include <algorithm>

#include "gemel/errors.h"
#include "gemel/rng.h"
#include "gemel/unicode_text.h"
#include "test_util.h"

namespace gemel {
namespace {

using Strings = std::vector<std::string>;

TEST(SegmentTest, SplitsPunctuationRuns) {
  EXPECT_EQ(Segment("Harry Potter (film series)"),
            (Strings{"Harry", "Potter", "(", "film", "series", ")"}));
  EXPECT_EQ(Segment("U.S."), (Strings{"U", ".", "S", "."}));
  EXPECT_EQ(Segment(""), Strings{});
  EXPECT_EQ(Segment("wait...!? ok"), (Strings{"wait", "...!?", "ok"}));
  EXPECT_EQ(Segment("  a   b　c "), (Strings{"a", "b", "c"}));
}

TEST(SegmentTest, AppliesNfcFirst) {
  EXPECT_EQ(Segment("Á"), Strings{"Á"});
}

TEST(VocabularyTest, SpecialsComeFirst) {
  Vocabulary v;
  ASSERT_EQ(v.size(), special::kCount);
  EXPECT_EQ(v.token(special::kPad), Vocabulary::SpecialNames()[0]);
  EXPECT_EQ(v.Lookup(v.token(special::kEos)), special::kEos);
  EXPECT_EQ(v.Lookup(v.token(special::kImg)), special::kImg);
}

TEST(BuildVocabTest, UnionOfKbNamesSorted) {
  KnowledgeBase kb = testing::MakeKb({"a b", "b c"});
  Vocabulary v = BuildVocab({}, kb);
  Strings expected = Vocabulary::SpecialNames();
  for (const char* w : {"a", "b", "c"}) expected.push_back(w);
  EXPECT_EQ(v.tokens(), expected);
  for (TokenId i = 0; i < v.size(); ++i) EXPECT_EQ(v.Lookup(v.token(i)), i);
}

TEST(BuildVocabTest, DeterministicAndIncludesCorpusWords) {
  KnowledgeBase kb = testing::MakeKb({"a b", "b c"});
  Strings corpus = {"zebra crossing", "a zebra"};
  Vocabulary v1 = BuildVocab(corpus, kb);
  Vocabulary v2 = BuildVocab(corpus, kb);
  EXPECT_EQ(v1, v2);
  EXPECT_TRUE(v1.Contains("zebra"));
  std::reverse(corpus.begin(), corpus.end());
  EXPECT_EQ(BuildVocab(corpus, kb), v1);
  EXPECT_EQ(v1.Hash(), v2.Hash());
}

TEST(BuildVocabTest, EmptyKbRejected) {
  EXPECT_THROW(BuildVocab({}, KnowledgeBase()), ValidationError);
}

TEST(TokenizeTest, MapsAndFallsBackToUnk) {
  KnowledgeBase kb = testing::MakeKb({"harry potter"});
  Vocabulary v = BuildVocab({}, kb);
  EXPECT_EQ(Tokenize(v, "harry potter"), (TokenSeq{v.Lookup("harry"), v.Lookup("potter")}));
  EXPECT_EQ(Tokenize(v, "voldemort"), TokenSeq{special::kUnk});
  EXPECT_EQ(Tokenize(v, ""), TokenSeq{});
}

TEST(DetokenizeTest, JoinsWithPunctuationRules) {
  KnowledgeBase kb = testing::MakeKb({"Harry Potter (film series)", "wheelchair fencing"});
  Vocabulary v = BuildVocab({}, kb);
  EXPECT_EQ(Detokenize(v, Tokenize(v, "Harry Potter (film series)")),
            "Harry Potter (film series)");
  EXPECT_EQ(Detokenize(v, Tokenize(v, "wheelchair fencing")), "wheelchair fencing");
}

TEST(DetokenizeTest, RejectsUnkSpecialsAndOutOfRange) {
  KnowledgeBase kb = testing::MakeKb({"a"});
  Vocabulary v = BuildVocab({}, kb);
  EXPECT_THROW(Detokenize(v, TokenSeq{special::kUnk}), ValidationError);
  EXPECT_THROW(Detokenize(v, TokenSeq{special::kEos}), ValidationError);
  EXPECT_THROW(Detokenize(v, TokenSeq{static_cast<TokenId>(v.size())}), ValidationError);
}

TEST(DetokenizeTest, RoundTripsEveryKbName) {
  KnowledgeBase kb = testing::MakeKb({"Harry Potter (film series)", "Café de Flore",
                                      "Paris [France]", "{x} y", "Mr. T", "x: y", "wheelchair fencing"});
  Vocabulary v = BuildVocab({}, kb);
  for (const auto& e : kb.entities()) {
    EXPECT_EQ(Detokenize(v, Tokenize(v, e.name)), e.name);
  }
}

TEST(DetokenizeTest, NonCanonicalSpacingMapsToCanonicalForm) {
  KnowledgeBase kb = testing::MakeKb({"U.S. Open (tennis)", "AC/DC", "l'été"});
  Vocabulary v = BuildVocab({}, kb);
  EXPECT_EQ(Detokenize(v, Tokenize(v, "U.S. Open (tennis)")), "U. S. Open (tennis)");
  EXPECT_EQ(Detokenize(v, Tokenize(v, "AC/DC")), "AC/ DC");
  for (const auto& e : kb.entities()) {
    const std::string canonical = Detokenize(v, Tokenize(v, e.name));
    EXPECT_EQ(Tokenize(v, canonical), Tokenize(v, e.name));
    EXPECT_EQ(Detokenize(v, Tokenize(v, canonical)), canonical);
  }
}

TEST(DetokenizeTest, RoundTripsRandomCanonicalNames) {
  // Names are generated in canonical spacing, the form the joining rule
  // reproduces.
  const Strings words = {"alpha", "Beta", "γάμμα", "d3lta", "é"};
  const Strings closers = {")", ".", ",", "!", ":", "]"};
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    std::string name = words[rng.UniformInt(words.size())];
    const size_t extra = rng.UniformInt(5);
    for (size_t i = 0; i < extra; ++i) {
      switch (rng.UniformInt(3)) {
        case 0: name += " " + words[rng.UniformInt(words.size())]; break;
        case 1: name += closers[rng.UniformInt(closers.size())]; break;
        default: name += " (" + words[rng.UniformInt(words.size())] + ")"; break;
      }
    }
    KnowledgeBase kb({{"Q", name, 0}});
    Vocabulary v = BuildVocab({}, kb);
    EXPECT_EQ(Detokenize(v, Tokenize(v, kb.at(0).name)), kb.at(0).name);
  }
}

TEST(VocabularyTest, JsonRoundTripAndValidation) {
  testing::TempDir dir;
  KnowledgeBase kb = testing::MakeKb({"a b", "c"});
  Vocabulary v = BuildVocab({}, kb);
  v.Save(dir.File("vocab.json"));
  EXPECT_EQ(Vocabulary::Load(dir.File("vocab.json")), v);
  EXPECT_THROW(Vocabulary::FromJson("{\"specials\":[],\"tokens\":[]}"), ValidationError);
  EXPECT_THROW(Vocabulary::FromJson("not json"), ValidationError);
  EXPECT_THROW(Vocabulary::Load(dir.File("missing.json")), IoError);
}

}  // namespace
}  // namespace gemel
