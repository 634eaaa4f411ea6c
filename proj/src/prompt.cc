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

#include "gemel/prompt.h"

#include <unicode/utf8.h>

#include <fstream>
#include <sstream>

#include "gemel/binary_io.h"
#include "gemel/errors.h"
#include "json.hpp"

namespace gemel {

using json = nlohmann::json;

namespace {

// Byte offset of the `cp`-th code point; npos when past the end.
size_t ByteOffset(const std::string& text, size_t cp) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  for (size_t n = 0; n < cp; ++n) {
    if (i >= length) return std::string::npos;
    U8_FWD_1(bytes, i, length);
  }
  return static_cast<size_t>(i);
}

size_t CodePoints(std::string_view text) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  size_t n = 0;
  for (int32_t i = 0; i < length; ++n) U8_FWD_1(bytes, i, length);
  return n;
}

const std::string& GoldName(const KnowledgeBase& kb, const std::string& id) {
  auto ordinal = kb.FindById(id);
  if (!ordinal) throw ValidationError("gold entity " + id + " is not in the KB");
  return kb.at(*ordinal).name;
}

}  // namespace

void ValidateInstance(const MentionInstance& inst) {
  const size_t begin = ByteOffset(inst.text, inst.span_start);
  const size_t end = ByteOffset(inst.text, inst.span_end);
  if (inst.span_start > inst.span_end || begin == std::string::npos ||
      end == std::string::npos ||
      inst.text.compare(begin, end - begin, inst.mention) != 0 ||
      end - begin != inst.mention.size()) {
    throw ValidationError("instance " + inst.id + ": text[span] does not equal mention");
  }
  if (inst.mention.empty()) throw ValidationError("instance " + inst.id + ": empty mention");
}

std::vector<MentionInstance> ParseDataset(const std::string& jsonl) {
  std::vector<MentionInstance> out;
  std::istringstream in(jsonl);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    MentionInstance inst;
    try {
      json obj = json::parse(line);
      inst.id = obj.at("id").get<std::string>();
      inst.text = obj.at("text").get<std::string>();
      inst.mention = obj.at("mention").get<std::string>();
      auto span = obj.at("span").get<std::vector<size_t>>();
      if (span.size() != 2) throw ValidationError("span must have two entries");
      inst.span_start = span[0];
      inst.span_end = span[1];
      if (obj.contains("image_ref") && !obj["image_ref"].is_null()) {
        inst.image_ref = obj["image_ref"].get<std::string>();
      }
      if (obj.contains("gold") && !obj["gold"].is_null()) {
        inst.gold = obj["gold"].get<std::string>();
      }
    } catch (const std::exception& e) {
      throw ValidationError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
    ValidateInstance(inst);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<MentionInstance> LoadDataset(const std::string& path) {
  return ParseDataset(ReadFileBytes(path));
}

std::string SerializeDataset(std::span<const MentionInstance> instances) {
  std::string out;
  for (const MentionInstance& inst : instances) {
    json obj = {{"id", inst.id},
                {"text", inst.text},
                {"mention", inst.mention},
                {"span", {inst.span_start, inst.span_end}}};
    if (inst.image_ref) obj["image_ref"] = *inst.image_ref;
    if (inst.gold) obj["gold"] = *inst.gold;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void SaveDataset(std::span<const MentionInstance> instances, const std::string& path) {
  WriteFileBytes(path, SerializeDataset(instances));
}

std::optional<std::pair<size_t, size_t>> FindSpan(const std::string& text,
                                                  const std::string& mention) {
  const size_t pos = text.find(mention);
  if (pos == std::string::npos || mention.empty()) return std::nullopt;
  const size_t start = CodePoints(std::string_view(text).substr(0, pos));
  return std::make_pair(start, start + CodePoints(mention));
}

size_t PromptSequence::Length() const {
  size_t n = 0;
  for (const PromptSegment& seg : segments) {
    if (const auto* v = std::get_if<VisualPrefix>(&seg)) {
      n += v->slots;
    } else {
      n += std::get<TokenSpan>(seg).ids.size();
    }
  }
  return n;
}

size_t PromptSequence::CountVisual() const {
  size_t n = 0;
  for (const PromptSegment& seg : segments) n += std::holds_alternative<VisualPrefix>(seg);
  return n;
}

std::string TemplateText() {
  return "Text: Question: What does mentioned in the text refer to? Answer:";
}

TokenSeq AnswerTokens(const Vocabulary& vocab, const KnowledgeBase& kb,
                      const std::string& entity_id) {
  TokenSeq ids = Tokenize(vocab, GoldName(kb, entity_id));
  ids.push_back(special::kEos);
  return ids;
}

std::vector<PromptSegment> FormatDemonstration(const Vocabulary& vocab,
                                               const KnowledgeBase& kb,
                                               const MentionInstance& inst,
                                               bool with_answer,
                                               const PromptOptions& options) {
  std::vector<PromptSegment> segments;
  if (options.use_visual && inst.image_ref) {
    segments.push_back(VisualPrefix{*inst.image_ref, options.prefix_len});
  }
  TokenSeq ids = Tokenize(vocab, "Text: " + inst.text + " Question: What does " +
                                     inst.mention +
                                     " mentioned in the text refer to? Answer:");
  if (with_answer) {
    if (!inst.gold) {
      throw ValidationError("demonstration " + inst.id + " has no gold entity");
    }
    TokenSeq answer = AnswerTokens(vocab, kb, *inst.gold);
    ids.insert(ids.end(), answer.begin(), answer.end());
  }
  segments.push_back(TokenSpan{std::move(ids)});
  return segments;
}

PromptSequence AssemblePrompt(const Vocabulary& vocab, const KnowledgeBase& kb,
                              std::span<const MentionInstance> demos,
                              const MentionInstance& query,
                              const PromptOptions& options) {
  PromptSequence prompt;
  if (options.use_icl) {
    for (const MentionInstance& demo : demos) {
      auto segs = FormatDemonstration(vocab, kb, demo, /*with_answer=*/true, options);
      prompt.segments.insert(prompt.segments.end(), segs.begin(), segs.end());
    }
  }
  auto segs = FormatDemonstration(vocab, kb, query, /*with_answer=*/false, options);
  prompt.segments.insert(prompt.segments.end(), segs.begin(), segs.end());
  prompt.answer_start = prompt.Length();
  return prompt;
}

MentionTokens TokenizeWithMention(const Vocabulary& vocab, const MentionInstance& inst) {
  ValidateInstance(inst);
  const size_t begin = ByteOffset(inst.text, inst.span_start);
  const size_t end = ByteOffset(inst.text, inst.span_end);
  MentionTokens out;
  out.ids = Tokenize(vocab, inst.text.substr(0, begin));
  out.begin = out.ids.size();
  TokenSeq mention = Tokenize(vocab, inst.mention);
  out.ids.insert(out.ids.end(), mention.begin(), mention.end());
  out.end = out.ids.size();
  TokenSeq rest = Tokenize(vocab, inst.text.substr(end));
  out.ids.insert(out.ids.end(), rest.begin(), rest.end());
  return out;
}

}  // namespace gemel
