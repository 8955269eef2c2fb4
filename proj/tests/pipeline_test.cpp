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

#include "doctest.h"
#include "tsqa/error.hpp"
#include "tsqa/qa_suite.hpp"
#include "tsqa/synth.hpp"

namespace tsqa {
namespace {

const Timeline& two_weeks() {
  static const Timeline kT = [] {
    synth::Config c;
    c.days = 14;
    c.seed = 5;
    return synth::generate(c);
  }();
  return kT;
}

std::unique_ptr<Pipeline> oracle(PipelineConfig config = {}) {
  return Pipeline::from_oracle(two_weeks(), LabelVocabulary(synth::label_phrases()), config);
}

TEST_CASE("oracle pipeline reproduces the synthetic suite exactly") {
  auto p = oracle();
  QaSuiteConfig qc;
  qc.per_category = 40;
  qc.seed = 3;
  const auto suite = make_qa_suite(two_weeks(), p->vocabulary(), p->lexicon(), qc);
  CHECK(suite.size() == 240);
  std::size_t empty = 0;
  for (const QaRecord& r : suite) {
    REQUIRE(r.choices);
    CHECK(std::count(r.choices->begin(), r.choices->end(), r.short_answer) == 1);
    CHECK((*r.choices)[static_cast<std::size_t>(*r.correct_choice)] == r.short_answer);
    empty += r.short_answer == "No" || r.short_answer == "0 minutes";
  }
  CHECK(empty < suite.size() / 3);
  const EvalReport rep = evaluate(suite, [&](const QaRecord& r) {
    const ChatTrace t = p->answer(r.question, r.user_id, r.now);
    return GeneratedAnswer{t.answer.full_answer, t.answer.short_answer};
  });
  for (const EvalRow& row : rep.rows) {
    if (!row.exact) INFO(row.question << " -> " << row.generated_short << " vs " << row.truth_short);
  }
  CHECK(rep.failures == 0);
  CHECK(rep.short_exact == 1.0);
  CHECK(rep.rouge1 == 1.0);
  CHECK(*rep.mc_accuracy == 1.0);
}

TEST_CASE("suite generation is deterministic") {
  auto p = oracle();
  QaSuiteConfig qc;
  qc.per_category = 5;
  qc.seed = 9;
  const auto a = make_qa_suite(two_weeks(), p->vocabulary(), p->lexicon(), qc);
  const auto b = make_qa_suite(two_weeks(), p->vocabulary(), p->lexicon(), qc);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].to_json() == b[i].to_json());
}

TEST_CASE("chat trace carries the decomposition and contexts") {
  auto p = oracle();
  const std::int64_t now = suite_now(two_weeks());
  const ChatTrace t = p->answer("How long did I exercise yesterday?", std::nullopt, now);
  CHECK(t.decomposition.category == QuestionCategory::TimeQuery);
  REQUIRE(t.contexts.size() == 1);
  CHECK(t.latency_ms > 0);
  const auto j = t.to_json();
  CHECK(j["short_answer"].get<std::string>().find("minute") != std::string::npos);
  CHECK(j["decomposition"]["source"] == "rules");
  // identical body apart from latency
  auto j2 = p->answer("How long did I exercise yesterday?", std::nullopt, now).to_json();
  j2["latency_ms"] = j["latency_ms"];
  CHECK(j == j2);
  CHECK_THROWS_AS(p->answer("How long did I fly?", std::nullopt, now), Error);
  CHECK_THROWS_AS(p->answer("How long did I walk?", std::string("nobody"), now), Error);
}

TEST_CASE("model decomposition path with rule fallback") {
  auto p = oracle([] {
    PipelineConfig c;
    c.llm_decompose = true;
    c.llm_answer = true;
    return c;
  }());
  const std::int64_t now = suite_now(two_weeks());
  auto mock = std::make_shared<MockChatClient>(MockScript{{
      {"Question: Was I cooking today\\?\nReasoning:$", "Check cooking today.\nDecomposition: <<CalculateDuration>> ((cooked)) [[today]]"},
      {"Question: Was I eating today\\?\nReasoning:$", "Decomposition: <<FlyToMoon>>"},
      {"Response:$", "Yes, you did that."},
  }});
  p->set_client(mock);
  ChatTrace t = p->answer("Was I cooking today?", std::nullopt, now);
  CHECK(t.decomposition.source == DecompositionSource::Llm);
  CHECK(t.decomposition.specs.at(0).contexts == std::vector<std::string>{"cooking"});
  CHECK(t.answer.source == AnswerSource::Llm);
  CHECK(t.answer.short_answer == "Yes");

  t = p->answer("Was I eating today?", std::nullopt, now);
  CHECK(t.decomposition.source == DecompositionSource::Rules);
  REQUIRE(t.decomposition_error);
  CHECK(t.decomposition_error->find("FlyToMoon") != std::string::npos);

  try {
    p->answer("Was I flying today?", std::nullopt, now);
    FAIL("expected decomposition failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDecomposition);
    CHECK(std::string(e.what()).find("rules failed") != std::string::npos);
  }
}

TEST_CASE("timeline slices") {
  auto p = oracle();
  const Timeline& t = two_weeks();
  const std::int64_t day = t.windows.front().timestamp;
  const auto slice = p->timeline(std::nullopt, day, day + 86400, 1);
  CHECK(slice.size() == 1440);
  // k = 1 with the oracle gives a ground-truth label
  for (std::size_t i = 0; i < slice.size(); i += 97) {
    REQUIRE(slice[i].labels.size() == 1);
    CHECK(t.windows[i].has_label(slice[i].labels[0].label));
  }
  CHECK(p->timeline(std::nullopt, day, day, 3).empty());
  CHECK(p->timeline(std::nullopt, day, day + 60, 3).at(0).labels.size() == 3);
  CHECK_THROWS_AS(p->timeline(std::nullopt, day + 10, day, 1), Error);
}

TEST_CASE("pipeline config round trip") {
  PipelineConfig c;
  c.query.threshold = 0.7;
  c.llm_answer = true;
  const PipelineConfig back = PipelineConfig::from_json(c.to_json());
  CHECK(back.query.threshold == 0.7);
  CHECK(back.llm_answer);
  CHECK(back.to_json() == c.to_json());
  CHECK_THROWS_AS(PipelineConfig::from_json({{"threshold", 1.5}}), Error);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"temperature", -1}}), Error);
}

}  // namespace
}  // namespace tsqa
