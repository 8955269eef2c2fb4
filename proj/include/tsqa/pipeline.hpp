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

#ifndef TSQA_PIPELINE_HPP_
#define TSQA_PIPELINE_HPP_

// Question in, answer out: decomposition, query execution over a window
// store and answer assembly, with an optional chat model for stages 1 and 3.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsqa/assembler.hpp"
#include "tsqa/decomposer.hpp"
#include "tsqa/encoders.hpp"
#include "tsqa/gateway.hpp"
#include "tsqa/query.hpp"
#include "tsqa/store.hpp"

namespace tsqa {

struct PipelineConfig {
  QueryOptions query;
  GenConfig gen;
  bool llm_decompose = false;  // needs a chat client
  bool llm_answer = false;

  void validate() const;
  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
};

struct ChatTrace {
  std::string question;
  DecompositionResult decomposition;
  std::vector<SensorContext> contexts;
  AnswerBundle answer;
  std::optional<std::string> decomposition_error;  // model path failure before the rule fallback
  double latency_ms = 0;

  nlohmann::json to_json() const;
};

struct LabelScore {
  std::string label;
  double score = 0;
};

struct TimelineEntry {
  std::int64_t timestamp = 0;
  std::vector<LabelScore> labels;  // best first
};

class Pipeline {
 public:
  // Learned path over an embedding store.
  static std::unique_ptr<Pipeline> from_model(Parameters params, EmbeddingStore store, SimilarityModel model,
                                              PipelineConfig config, const SynonymTable& synonyms = default_synonyms(),
                                              TemplateLibrary templates = default_templates());
  // Ground-truth labels as the similarity function.
  static std::unique_ptr<Pipeline> from_oracle(Timeline timeline, LabelVocabulary vocab, PipelineConfig config,
                                               const SynonymTable& synonyms = default_synonyms(),
                                               TemplateLibrary templates = default_templates());

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  const LabelVocabulary& vocabulary() const { return vocab_; }
  const Lexicon& lexicon() const { return *lexicon_; }
  const WindowIndex& index() const { return index_; }
  const PipelineConfig& config() const { return config_; }
  const TemplateLibrary& templates() const { return templates_; }
  std::vector<std::string> users() const;

  void set_client(std::shared_ptr<ChatClient> client) { client_ = std::move(client); }
  bool has_client() const { return client_ != nullptr; }

  // Throws kDecomposition when both paths fail.
  DecompositionResult decompose(std::string_view question, std::optional<std::string>* model_error = nullptr,
                                std::optional<bool> use_model = std::nullopt) const;
  std::vector<SensorContext> run_queries(const std::vector<QuerySpec>& specs, const std::optional<std::string>& user,
                                         std::int64_t now) const;
  // `use_model` overrides both llm_* flags for this call.
  ChatTrace answer(std::string_view question, const std::optional<std::string>& user, std::int64_t now,
                   std::optional<bool> use_model = std::nullopt) const;

  // Top-k labels per window in [from, to).
  std::vector<TimelineEntry> timeline(const std::optional<std::string>& user, std::int64_t from, std::int64_t to,
                                      int k) const;

 private:
  Pipeline() = default;
  void finish(const SynonymTable& synonyms);

  PipelineConfig config_;
  LabelVocabulary vocab_;
  TemplateLibrary templates_;
  WindowIndex index_;
  std::unique_ptr<Lexicon> lexicon_;
  std::optional<Parameters> params_;
  std::optional<EmbeddingStore> store_;
  std::optional<SimilarityModel> model_;
  std::unique_ptr<ScoringIndex> scoring_;
  std::optional<Timeline> truth_;
  std::unique_ptr<WindowScorer> scorer_;
  std::shared_ptr<ChatClient> client_;
};

}  // namespace tsqa

#endif  // TSQA_PIPELINE_HPP_
