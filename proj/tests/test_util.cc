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

#include "test_util.h"

#include <fstream>
#include <random>
#include <sstream>

#include "gemel/binary_io.h"
#include "gemel/errors.h"

namespace gemel::testing {

TempDir::TempDir() {
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("gemel_test_" + std::to_string(rd()) + std::to_string(rd()));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

KnowledgeBase MakeKb(const std::vector<std::string>& names) {
  std::vector<EntityRecord> records;
  for (size_t i = 0; i < names.size(); ++i) {
    records.push_back({"Q" + std::to_string(i + 1), names[i], static_cast<int64_t>(i)});
  }
  return KnowledgeBase(std::move(records));
}

Vocabulary VocabFor(const KnowledgeBase& kb, const std::string& extra) {
  std::vector<std::string> corpora = {TemplateText(), extra};
  return BuildVocab(corpora, kb);
}

TokenSeq Ids(const Vocabulary& vocab, const std::string& text) { return Tokenize(vocab, text); }

MentionInstance MakeMention(const std::string& id, const std::string& text,
                            const std::string& mention, std::optional<std::string> gold,
                            std::optional<std::string> image_ref) {
  MentionInstance inst;
  inst.id = id;
  inst.text = text;
  inst.mention = mention;
  auto span = FindSpan(text, mention);
  if (!span) throw ValidationError("mention not in text");
  inst.span_start = span->first;
  inst.span_end = span->second;
  inst.gold = std::move(gold);
  inst.image_ref = std::move(image_ref);
  return inst;
}

std::string ReadText(const std::string& path) { return ReadFileBytes(path); }

void WriteText(const std::string& path, const std::string& text) { WriteFileBytes(path, text); }

}  // namespace gemel::testing
