// Copyright 2026 The tsqa Authors.
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

#ifndef TSQA_TEXT_HPP_
#define TSQA_TEXT_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace tsqa::text {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

// Lowercases and splits on every non-alphanumeric byte; empty pieces dropped.
std::vector<std::string> tokenize(std::string_view s);

// Lowercase, punctuation stripped, whitespace collapsed to single spaces.
std::string normalize_answer(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool contains_word_sequence(const std::vector<std::string>& haystack, const std::vector<std::string>& needle);

}  // namespace tsqa::text

#endif  // TSQA_TEXT_HPP_
