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

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "gemel/binary_io.h"
#include "gemel/errors.h"
#include "gemel/unicode_text.h"
#include "json.hpp"

namespace gemel {

using json = nlohmann::json;

const std::vector<std::string>& Vocabulary::SpecialNames() {
  static const std::vector<std::string> names = {"<pad>", "<s>",   "</s>",
                                                 "<unk>", "<img>", "<sep>"};
  return names;
}

Vocabulary::Vocabulary(std::vector<std::string> words) {
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  tokens_ = SpecialNames();
  for (std::string& w : words) {
    if (w.empty()) throw ValidationError("empty token in vocabulary");
    if (std::find(SpecialNames().begin(), SpecialNames().end(), w) !=
        SpecialNames().end()) {
      throw ValidationError("vocabulary word collides with special " + w);
    }
    tokens_.push_back(std::move(w));
  }
  for (size_t i = 0; i < tokens_.size(); ++i) {
    lookup_.emplace(tokens_[i], static_cast<TokenId>(i));
  }
}

TokenId Vocabulary::Lookup(std::string_view token) const {
  auto it = lookup_.find(std::string(token));
  return it == lookup_.end() ? special::kUnk : it->second;
}

bool Vocabulary::Contains(std::string_view token) const {
  return lookup_.count(std::string(token)) != 0;
}

std::string Vocabulary::ToJson() const {
  json obj;
  obj["specials"] = SpecialNames();
  obj["tokens"] = tokens_;
  return obj.dump();
}

Vocabulary Vocabulary::FromJson(const std::string& text) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("vocabulary JSON: ") + e.what());
  }
  auto specials = obj.at("specials").get<std::vector<std::string>>();
  auto tokens = obj.at("tokens").get<std::vector<std::string>>();
  if (specials != SpecialNames() || tokens.size() < specials.size() ||
      !std::equal(specials.begin(), specials.end(), tokens.begin())) {
    throw ValidationError("vocabulary specials do not match ids 0..5");
  }
  std::vector<std::string> words(tokens.begin() + specials.size(), tokens.end());
  Vocabulary vocab(words);
  if (vocab.tokens_ != tokens) {
    throw ValidationError("vocabulary tokens are not sorted and distinct");
  }
  return vocab;
}

void Vocabulary::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + path);
  out << ToJson() << '\n';
}

Vocabulary Vocabulary::Load(const std::string& path) {
  return FromJson(ReadFileBytes(path));
}

uint32_t Vocabulary::Hash() const {
  std::string canonical = ToJson();
  return Crc32(std::as_bytes(std::span(canonical)));
}

Vocabulary BuildVocab(std::span<const std::string> corpora,
                      const KnowledgeBase& kb) {
  if (kb.empty()) throw ValidationError("cannot build a vocabulary from an empty KB");
  std::set<std::string> words;
  auto add = [&](std::string_view text) {
    for (std::string& tok : Segment(text)) words.insert(std::move(tok));
  };
  for (const EntityRecord& e : kb.entities()) add(e.name);
  for (const std::string& text : corpora) add(text);
  for (const std::string& s : Vocabulary::SpecialNames()) words.erase(s);
  return Vocabulary(std::vector<std::string>(words.begin(), words.end()));
}

TokenSeq Tokenize(const Vocabulary& vocab, std::string_view text) {
  TokenSeq ids;
  for (const std::string& tok : Segment(text)) ids.push_back(vocab.Lookup(tok));
  return ids;
}

std::string Detokenize(const Vocabulary& vocab, std::span<const TokenId> ids) {
  std::string out;
  bool suppress_space = true;
  for (TokenId id : ids) {
    if (id >= vocab.size()) {
      throw ValidationError("token id " + std::to_string(id) + " out of range");
    }
    if (id < special::kCount) {
      throw ValidationError("cannot detokenize special token " + vocab.token(id));
    }
    const std::string& tok = vocab.token(id);
    const bool opening = tok == "(" || tok == "[" || tok == "{";
    if (!suppress_space && (opening || !IsPunctuationToken(tok))) {
      out.push_back(' ');
    }
    out += tok;
    suppress_space = opening;
  }
  return out;
}

}  // namespace gemel
