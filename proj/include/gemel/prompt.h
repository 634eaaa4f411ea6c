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

#ifndef GEMEL_PROMPT_H_
#define GEMEL_PROMPT_H_

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gemel/kb_store.h"
#include "gemel/tokenizer.h"

namespace gemel {

// One mention with its sentence, optional image and optional gold entity.
// `span` holds [start, end) code-point offsets of `mention` inside `text`.
struct MentionInstance {
  std::string id;
  std::string text;
  std::string mention;
  size_t span_start = 0;
  size_t span_end = 0;
  std::optional<std::string> image_ref;
  std::optional<std::string> gold;

  bool operator==(const MentionInstance&) const = default;
};

// Throws ValidationError when text[span] != mention or the span is out of
// range.
void ValidateInstance(const MentionInstance& inst);

// JSON-lines: {"id", "text", "mention", "span": [s, e], "image_ref"?, "gold"?}.
std::vector<MentionInstance> ParseDataset(const std::string& jsonl);
std::vector<MentionInstance> LoadDataset(const std::string& path);
std::string SerializeDataset(std::span<const MentionInstance> instances);
void SaveDataset(std::span<const MentionInstance> instances, const std::string& path);

// Code-point span of the first occurrence of `mention` in `text`.
std::optional<std::pair<size_t, size_t>> FindSpan(const std::string& text,
                                                  const std::string& mention);

// k embedding slots filled from the image features of `image_ref`.
struct VisualPrefix {
  std::string image_ref;
  size_t slots = 0;
  bool operator==(const VisualPrefix&) const = default;
};

struct TokenSpan {
  TokenSeq ids;
  bool operator==(const TokenSpan&) const = default;
};

using PromptSegment = std::variant<VisualPrefix, TokenSpan>;

struct PromptSequence {
  std::vector<PromptSegment> segments;
  // Position where the answer region begins (= total length for a query).
  size_t answer_start = 0;

  size_t Length() const;
  size_t CountVisual() const;
  bool operator==(const PromptSequence&) const = default;
};

struct PromptOptions {
  bool use_visual = true;
  bool use_icl = true;
  size_t prefix_len = 4;  // k
};

// "Text: <text> Question: What does <mention> mentioned in the text refer
// to? Answer:", preceded by a VisualPrefix when the instance has an image and
// visual input is enabled. With an answer, the gold name tokens and EOS
// follow. Throws ValidationError when an answer is requested without gold.
std::vector<PromptSegment> FormatDemonstration(const Vocabulary& vocab,
                                               const KnowledgeBase& kb,
                                               const MentionInstance& inst,
                                               bool with_answer,
                                               const PromptOptions& options);

// Demonstrations (already in ascending relevance) with answers, then the
// query without one.
PromptSequence AssemblePrompt(const Vocabulary& vocab, const KnowledgeBase& kb,
                              std::span<const MentionInstance> demos,
                              const MentionInstance& query,
                              const PromptOptions& options);

// Gold-name tokens followed by EOS.
TokenSeq AnswerTokens(const Vocabulary& vocab, const KnowledgeBase& kb,
                      const std::string& entity_id);

// Tokens of `text` with the positions [begin, end) occupied by the mention.
// Fixed words of the prompt template, for vocabulary construction.
std::string TemplateText();

struct MentionTokens {
  TokenSeq ids;
  size_t begin = 0;
  size_t end = 0;
};
MentionTokens TokenizeWithMention(const Vocabulary& vocab, const MentionInstance& inst);

}  // namespace gemel

#endif  // GEMEL_PROMPT_H_
