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

#ifndef GEMEL_UNICODE_TEXT_H_
#define GEMEL_UNICODE_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace gemel {

// NFC, trimmed, internal whitespace runs collapsed to one ASCII space.
// Idempotent. Invalid UTF-8 sequences are replaced with U+FFFD.
std::string NormalizeName(std::string_view raw);

// NFC, split on Unicode whitespace, then every maximal run of Unicode
// punctuation (general category P*) becomes its own token.
std::vector<std::string> Segment(std::string_view text);

// True when every code point of `token` is Unicode punctuation.
bool IsPunctuationToken(std::string_view token);

}  // namespace gemel

#endif  // GEMEL_UNICODE_TEXT_H_
