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

#ifndef TSQA_ASSEMBLER_HPP_
#define TSQA_ASSEMBLER_HPP_

// Turns query results into a full sentence and a short key-word answer,
// either from fixed sentence templates or through a chat model.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsqa/decomposer.hpp"
#include "tsqa/gateway.hpp"
#include "tsqa/query.hpp"

namespace tsqa {

enum class AnswerSource { Templates, Llm };

struct GenConfig {
  double temperature = 0.2;
  int max_tokens = 1024;

  void validate() const;
};

struct AnswerBundle {
  std::string full_answer;
  std::string short_answer;
  std::vector<SensorContext> contexts_used;
  AnswerSource source = AnswerSource::Templates;
  std::optional<std::string> error;  // set when the model path fell back

  nlohmann::json to_json() const;
};

std::string build_answer_prompt(const std::vector<SensorContext>& contexts, std::string_view question);

AnswerBundle assemble_template(QuestionCategory category, const std::vector<QuerySpec>& specs,
                               const std::vector<SensorContext>& contexts, std::string_view question,
                               const LabelVocabulary& vocab);

// Falls back to the template answer (with `error` set) when the client fails.
AnswerBundle assemble_llm(ChatClient& client, QuestionCategory category, const std::vector<QuerySpec>& specs,
                          const std::vector<SensorContext>& contexts, std::string_view question,
                          const LabelVocabulary& vocab, const GenConfig& gen = {});

// Category-keyed pattern extraction; the first three tokens when nothing matches.
std::string extract_short_answer(std::string_view full, QuestionCategory category, const LabelVocabulary& vocab);

}  // namespace tsqa

#endif  // TSQA_ASSEMBLER_HPP_
