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

#include "tsqa/pipeline.hpp"

#include <algorithm>
#include <chrono>

#include "tsqa/error.hpp"

namespace tsqa {

void PipelineConfig::validate() const {
  query.validate();
  gen.validate();
}

nlohmann::json PipelineConfig::to_json() const {
  return {{"threshold", query.threshold},
          {"top_k", query.top_k},
          {"gap_minutes", query.gap_minutes},
          {"time_of_day", query.day_parts.to_json()},
          {"temperature", gen.temperature},
          {"max_tokens", gen.max_tokens},
          {"llm_decompose", llm_decompose},
          {"llm_answer", llm_answer}};
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    c.query.threshold = j.value("threshold", c.query.threshold);
    c.query.top_k = j.value("top_k", c.query.top_k);
    c.query.gap_minutes = j.value("gap_minutes", c.query.gap_minutes);
    if (j.contains("time_of_day")) c.query.day_parts = DayParts::from_json(j.at("time_of_day"));
    c.gen.temperature = j.value("temperature", c.gen.temperature);
    c.gen.max_tokens = j.value("max_tokens", c.gen.max_tokens);
    c.llm_decompose = j.value("llm_decompose", c.llm_decompose);
    c.llm_answer = j.value("llm_answer", c.llm_answer);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("bad pipeline config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json ChatTrace::to_json() const {
  nlohmann::json ctx = nlohmann::json::array();
  for (const SensorContext& c : contexts) ctx.push_back({{"text", c.text}, {"values", c.values}});
  nlohmann::json j = {{"question", question},
                      {"answer", answer.full_answer},
                      {"short_answer", answer.short_answer},
                      {"source", answer.source == AnswerSource::Templates ? "templates" : "llm"},
                      {"category", category_name(decomposition.category)},
                      {"decomposition", decomposition.to_json()},
                      {"contexts", ctx},
                      {"latency_ms", latency_ms}};
  if (answer.error) j["answer_error"] = *answer.error;
  if (decomposition_error) j["decomposition_error"] = *decomposition_error;
  return j;
}

std::unique_ptr<Pipeline> Pipeline::from_model(Parameters params, EmbeddingStore store, SimilarityModel model,
                                               PipelineConfig config, const SynonymTable& synonyms,
                                               TemplateLibrary templates) {
  config.validate();
  if (store.embed_dim() != params.embed_dim()) {
    throw Error(ErrorCode::kSchema, "store dimension " + std::to_string(store.embed_dim()) +
                                        " does not match the encoder dimension " + std::to_string(params.embed_dim()));
  }
  std::unique_ptr<Pipeline> p(new Pipeline());
  p->config_ = std::move(config);
  p->vocab_ = params.vocabulary;
  p->templates_ = std::move(templates);
  p->params_ = std::move(params);
  p->store_ = std::move(store);
  p->model_ = std::move(model);
  p->index_ = p->store_->index();
  p->scoring_ = std::make_unique<ScoringIndex>(*p->store_, *p->model_);
  p->scorer_ = std::make_unique<ModelScorer>(*p->scoring_, *p->params_);
  p->finish(synonyms);
  return p;
}

std::unique_ptr<Pipeline> Pipeline::from_oracle(Timeline timeline, LabelVocabulary vocab, PipelineConfig config,
                                                const SynonymTable& synonyms, TemplateLibrary templates) {
  config.validate();
  std::unique_ptr<Pipeline> p(new Pipeline());
  p->config_ = std::move(config);
  p->vocab_ = std::move(vocab);
  p->templates_ = std::move(templates);
  p->truth_ = std::move(timeline);
  p->index_ = WindowIndex::from_timeline(*p->truth_);
  p->scorer_ = std::make_unique<OracleScorer>(*p->truth_);
  p->finish(synonyms);
  return p;
}

void Pipeline::finish(const SynonymTable& synonyms) {
  check_library(templates_);
  lexicon_ = std::make_unique<Lexicon>(vocab_, synonyms);
}

std::vector<std::string> Pipeline::users() const {
  std::vector<std::string> out;
  for (const auto& b : index_.blocks()) out.push_back(b.user_id);
  return out;
}

DecompositionResult Pipeline::decompose(std::string_view question, std::optional<std::string>* model_error,
                                        std::optional<bool> use_model) const {
  std::optional<std::string> llm_error;
  if (use_model.value_or(config_.llm_decompose) && client_) {
    const QuestionCategory category = classify_category(question);
    try {
      const std::string prompt = build_prompt(question, templates_, category);
      const std::string reply = client_->complete({{ChatRole::User, prompt}}, config_.gen.temperature, config_.gen.max_tokens);
      DecompositionResult r = parse_llm_decomposition(reply, *lexicon_);
      r.category = category;
      return r;
    } catch (const Error& e) {
      llm_error = e.what();
    }
  }
  if (model_error) *model_error = llm_error;
  try {
    return decompose_rules(question, *lexicon_);
  } catch (const Error& e) {
    if (!llm_error) throw;
    throw Error(ErrorCode::kDecomposition, "model decomposition failed (" + *llm_error + ") and rules failed (" +
                                               e.what() + ")");
  }
}

std::vector<SensorContext> Pipeline::run_queries(const std::vector<QuerySpec>& specs,
                                                 const std::optional<std::string>& user, std::int64_t now) const {
  QueryEnv env;
  env.index = &index_;
  env.scorer = scorer_.get();
  env.vocab = &vocab_;
  env.user_id = user;
  env.now = now;
  env.options = config_.query;
  return execute(specs, env);
}

ChatTrace Pipeline::answer(std::string_view question, const std::optional<std::string>& user, std::int64_t now,
                          std::optional<bool> use_model) const {
  const auto start = std::chrono::steady_clock::now();
  if (user && index_.block(*user) == nullptr) throw Error(ErrorCode::kNotFound, "unknown user '" + *user + "'");
  ChatTrace t;
  t.question = std::string(question);
  if (use_model.value_or(false) && !client_) throw Error(ErrorCode::kConfiguration, "no chat model is configured");
  t.decomposition = decompose(question, &t.decomposition_error, use_model);
  t.contexts = run_queries(t.decomposition.specs, user, now);
  if (use_model.value_or(config_.llm_answer) && client_) {
    t.answer = assemble_llm(*client_, t.decomposition.category, t.decomposition.specs, t.contexts, question, vocab_,
                            config_.gen);
  } else {
    t.answer = assemble_template(t.decomposition.category, t.decomposition.specs, t.contexts, question, vocab_);
  }
  const auto elapsed = std::chrono::steady_clock::now() - start;
  // never report zero, even on a coarse clock
  t.latency_ms = std::max(1e-3, std::chrono::duration<double, std::milli>(elapsed).count());
  return t;
}

std::vector<TimelineEntry> Pipeline::timeline(const std::optional<std::string>& user, std::int64_t from,
                                              std::int64_t to, int k) const {
  if (from > to) throw Error(ErrorCode::kPrecondition, "timeline range is reversed");
  if (k < 1) throw Error(ErrorCode::kPrecondition, "k must be at least 1");
  if (from == to) return {};
  const std::vector<std::size_t> records = index_.select({Interval{from, to}}, user);
  std::vector<std::vector<double>> scores(vocab_.size(), std::vector<double>(records.size()));
  for (std::size_t p = 0; p < vocab_.size(); ++p) scorer_->score(vocab_[p], records, scores[p]);
  std::vector<TimelineEntry> out;
  out.reserve(records.size());
  std::vector<std::size_t> order(vocab_.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (std::size_t p = 0; p < order.size(); ++p) order[p] = p;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a][r] > scores[b][r]; });
    TimelineEntry e;
    e.timestamp = index_.timestamp(records[r]);
    for (std::size_t i = 0; i < std::min<std::size_t>(static_cast<std::size_t>(k), order.size()); ++i) {
      e.labels.push_back({vocab_[order[i]], scores[order[i]][r]});
    }
    out.push_back(std::move(e));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return out;
}

}  // namespace tsqa
