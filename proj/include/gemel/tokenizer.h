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

#ifndef GEMEL_TOKENIZER_H_
#define GEMEL_TOKENIZER_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gemel/kb_store.h"

namespace gemel {

using TokenId = uint32_t;
using TokenSeq = std::vector<TokenId>;

namespace special {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr TokenId kImg = 4;
inline constexpr TokenId kSep = 5;
inline constexpr TokenId kCount = 6;
}  // namespace special

// Closed word-level vocabulary. Specials occupy ids 0..5, the remaining
// tokens follow in code-point order.
class Vocabulary {
 public:
  static const std::vector<std::string>& SpecialNames();

  Vocabulary() : Vocabulary(std::vector<std::string>{}) {}
  // `words` must not contain special names; duplicates are removed and the
  // result is sorted.
  explicit Vocabulary(std::vector<std::string> words);

  size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  // UNK for out-of-vocabulary strings.
  TokenId Lookup(std::string_view token) const;
  bool Contains(std::string_view token) const;

  std::string ToJson() const;
  static Vocabulary FromJson(const std::string& text);
  void Save(const std::string& path) const;
  static Vocabulary Load(const std::string& path);

  // CRC32 of the canonical JSON form; stored in checkpoints.
  uint32_t Hash() const;

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> lookup_;
};

// Specials plus every segment of every KB name and corpus text.
Vocabulary BuildVocab(std::span<const std::string> corpora,
                      const KnowledgeBase& kb);

TokenSeq Tokenize(const Vocabulary& vocab, std::string_view text);

// Joins tokens with single spaces, dropping the space before a
// punctuation-only token (opening brackets excepted) and after "(", "[" or
// "{". Throws ValidationError
// on out-of-range ids, UNK, or other specials.
std::string Detokenize(const Vocabulary& vocab, std::span<const TokenId> ids);

}  // namespace gemel

#endif  // GEMEL_TOKENIZER_H_
