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

#include "tsqa/decomposer.hpp"

#include <sstream>

#include "doctest.h"
#include "tsqa/error.hpp"
#include "tsqa/synth.hpp"

namespace tsqa {
namespace {

const LabelVocabulary& vocab() {
  static const LabelVocabulary kVocab(synth::label_phrases());
  return kVocab;
}

const Lexicon& lexicon() {
  static const Lexicon kLexicon(vocab(), default_synonyms());
  return kLexicon;
}

QuerySpec spec(QueryFunction f, std::vector<std::string> ctx, TimeScope scope, bool per_day = false) {
  QuerySpec q;
  q.function = f;
  q.contexts = std::move(ctx);
  q.scope = scope;
  q.per_day = per_day;
  return q;
}

TimeScope with_tod(TimeScope s, TimeOfDay t) {
  s.time_of_day = t;
  return s;
}

std::string dump(const std::vector<QuerySpec>& specs) { return specs_to_json(specs).dump(); }

TEST_CASE("classifier follows the keyword priority") {
  CHECK(classify_category("Did I spend more time sitting or standing yesterday?") == QuestionCategory::TimeCompare);
  CHECK(classify_category("Which day did I spend the most time at home?") == QuestionCategory::DayQuery);
  CHECK(classify_category("What day was I walking the most?") == QuestionCategory::DayQuery);
  CHECK(classify_category("How long did I sleep last night?") == QuestionCategory::TimeQuery);
  CHECK(classify_category("How much time did I spend cooking?") == QuestionCategory::TimeQuery);
  CHECK(classify_category("How often did I eat?") == QuestionCategory::Counting);
  CHECK(classify_category("How many days was I at the gym?") == QuestionCategory::Counting);
  CHECK(classify_category("Did I cook today?") == QuestionCategory::Existence);
  CHECK(classify_category("Was I outside?") == QuestionCategory::Existence);
  CHECK(classify_category("What did I do after I left home?") == QuestionCategory::ActionQuery);
  CHECK(classify_category("Tell me about walking") == QuestionCategory::TimeQuery);
  for (QuestionCategory c : kAllCategories) CHECK(parse_category(category_name(c)) == c);
  CHECK_FALSE(parse_category("Other"));
}

TEST_CASE("synonym table parsing") {
  std::istringstream in("# comment\n\nWorked  Out\texercise\nsat\tsitting\n");
  const SynonymTable t = parse_synonyms(in);
  CHECK(t.size() == 2);
  CHECK(t.at("worked out") == "exercise");
  std::istringstream bad("no tab here\n");
  CHECK_THROWS_AS(parse_synonyms(bad), Error);
  CHECK(default_synonyms().at("left home") == "at home");
}

TEST_CASE("lexicon prefers the longest match and respects blocked tokens") {
  const Lexicon& lx = lexicon();
  auto m = lx.find_all({"i", "was", "at", "the", "gym", "and", "watched", "tv"});
  REQUIRE(m.size() == 2);
  CHECK(m[0].phrase == "at the gym");
  CHECK(m[0].begin == 2);
  CHECK(m[0].end == 5);
  CHECK(m[1].phrase == "watching tv");
  auto blocked = lx.find_all({"at", "the", "gym"}, {false, false, true});
  CHECK(blocked.empty());
  CHECK(lx.resolve("Left  Home") == std::optional<std::string>("at home"));
  CHECK_FALSE(lx.resolve("flying"));
  const auto s = lx.surfaces("exercise");
  CHECK(s.front() == "exercise");
  CHECK(std::find(s.begin(), s.end(), "work out") != s.end());
}

TEST_CASE("synonyms pointing outside the vocabulary are ignored") {
  const LabelVocabulary small({"walking"});
  const Lexicon lx(small, default_synonyms());
  CHECK(lx.resolve("walked") == std::optional<std::string>("walking"));
  CHECK_FALSE(lx.resolve("gym"));
}

TEST_CASE("rules decomposition examples") {
  const Lexicon& lx = lexicon();
  auto r = decompose_rules("Did I spend more time sitting or standing yesterday?", lx);
  CHECK(r.category == QuestionCategory::TimeCompare);
  CHECK(r.source == DecompositionSource::Rules);
  const auto yday = TimeScope::relative(RelativeSpan::Yesterday);
  CHECK(dump(r.specs) == dump({spec(QueryFunction::CalculateDuration, {"sitting"}, yday),
                               spec(QueryFunction::CalculateDuration, {"standing"}, yday)}));
  CHECK_FALSE(r.reasoning.empty());

  r = decompose_rules("How long did I work out last week in the morning?", lx);
  CHECK(r.specs == std::vector<QuerySpec>{spec(QueryFunction::CalculateDuration, {"exercise"},
                                               with_tod(TimeScope::relative(RelativeSpan::LastWeek),
                                                        TimeOfDay::Morning))});

  r = decompose_rules("When was I last driving on Tuesday?", lx);
  CHECK(r.specs == std::vector<QuerySpec>{spec(QueryFunction::DetectLastTime, {"driving"}, TimeScope::named_day(2, false))});

  r = decompose_rules("When was I first at work last Friday?", lx);
  CHECK(r.specs == std::vector<QuerySpec>{spec(QueryFunction::DetectFirstTime, {"at work"}, TimeScope::named_day(5, true))});

  r = decompose_rules("How many days was I at the gym last week?", lx);
  CHECK(r.specs.at(0).function == QueryFunction::CountingDays);
  r = decompose_rules("How often did I groom yesterday?", lx);
  CHECK(r.specs.at(0).function == QueryFunction::CountingFrequency);
  CHECK(r.specs.at(0).contexts == std::vector<std::string>{"grooming"});

  r = decompose_rules("Which day did I spend the most time at home last week?", lx);
  CHECK(r.specs.at(0).per_day);

  r = decompose_rules("Did I cook this evening?", lx);
  CHECK(r.specs == std::vector<QuerySpec>{spec(QueryFunction::CalculateDuration, {"cooking"},
                                               with_tod(TimeScope::relative(RelativeSpan::Today), TimeOfDay::Evening))});

  r = decompose_rules("What did I do after I left home on Tuesday?", lx);
  CHECK(r.specs == std::vector<QuerySpec>{spec(QueryFunction::DetectLastTime, {"at home"}, TimeScope::named_day(2, false)),
                                          spec(QueryFunction::DetectActivity, {}, TimeScope::after_result(0))});
  r = decompose_rules("What was I doing before I drove?", lx);
  CHECK(r.specs.at(0).function == QueryFunction::DetectFirstTime);
  CHECK(r.specs.at(1).scope == TimeScope::before_result(0));

  r = decompose_rules("What was I doing yesterday at night?", lx);
  CHECK(r.specs == std::vector<QuerySpec>{spec(QueryFunction::DetectActivity, {},
                                               with_tod(yday, TimeOfDay::Night))});
}

TEST_CASE("rules decomposition errors") {
  const Lexicon& lx = lexicon();
  CHECK_THROWS_AS(decompose_rules("", lx), Error);
  try {
    decompose_rules("How long did I fly to the moon?", lx);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDecomposition);
  }
  CHECK_THROWS_AS(decompose_rules("Did I spend more time sitting or flying?", lx), Error);
  CHECK_THROWS_AS(decompose_rules("Did I walk yesterday or today?", lx), Error);
  CHECK_THROWS_AS(decompose_rules("What did I do after I flew?", lx), Error);
}

TEST_CASE("date phrases") {
  CHECK(parse_date_phrase("yesterday").scope == TimeScope::relative(RelativeSpan::Yesterday));
  CHECK(parse_date_phrase("").scope == TimeScope::all());
  CHECK(parse_date_phrase("all time").scope == TimeScope::all());
  const ParsedDate each = parse_date_phrase("each day last week");
  CHECK(each.per_day);
  CHECK(each.scope == TimeScope::relative(RelativeSpan::LastWeek));
  CHECK(parse_date_phrase("each day").per_day);
  CHECK(parse_date_phrase("after step 2").scope == TimeScope::after_result(1));
  CHECK(parse_date_phrase("before step 1").scope == TimeScope::before_result(0));
  CHECK(parse_date_phrase("last Sunday").scope == TimeScope::named_day(0, true));
  CHECK(parse_date_phrase("yesterday evening").scope == with_tod(TimeScope::relative(RelativeSpan::Yesterday), TimeOfDay::Evening));
  CHECK_THROWS_AS(parse_date_phrase("next month"), Error);
  CHECK_THROWS_AS(parse_date_phrase("after step 0"), Error);
  CHECK_THROWS_AS(parse_date_phrase("after step x"), Error);
}

TEST_CASE("marker parser") {
  const Lexicon& lx = lexicon();
  auto r = parse_llm_decomposition(
      "Reasoning: first sitting then standing.\nDecomposition: <<CalculateDuration>> ((sitting)) [[yesterday]] "
      "<<CalculateDuration>> ((standing)) [[yesterday]]",
      lx);
  CHECK(r.source == DecompositionSource::Llm);
  CHECK(r.reasoning == "first sitting then standing.");
  REQUIRE(r.specs.size() == 2);
  CHECK(r.specs[1].contexts == std::vector<std::string>{"standing"});

  r = parse_llm_decomposition("<<CalculateDuration>> ((home)) [[each day last week]] {{evening}}", lx);
  REQUIRE(r.specs.size() == 1);
  CHECK(r.specs[0].per_day);
  CHECK(r.specs[0].contexts == std::vector<std::string>{"at home"});
  CHECK(r.specs[0].scope.time_of_day == TimeOfDay::Evening);

  // the last Decomposition: wins over the copy echoed in reasoning
  r = parse_llm_decomposition("Decomposition: <<CountingDays>> ((walking))\nDecomposition: <<DetectActivity>> [[today]]", lx);
  CHECK(r.specs.at(0).function == QueryFunction::DetectActivity);

  auto code_of = [&](std::string_view text) {
    try {
      parse_llm_decomposition(text, lx);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kConfiguration;  // sentinel: no error raised
  };
  CHECK(code_of("Decomposition: <<FlyToMoon>> ((walking))") == ErrorCode::kParse);
  CHECK(code_of("Decomposition: <<CalculateDuration ((walking))") == ErrorCode::kParse);
  CHECK(code_of("Decomposition: <<CalculateDuration>> ((walking)) ]]") == ErrorCode::kParse);
  CHECK(code_of("Decomposition: ((walking)) <<CalculateDuration>>") == ErrorCode::kParse);
  CHECK(code_of("Decomposition: nothing marked") == ErrorCode::kParse);
  CHECK(code_of("Decomposition: <<CalculateDuration>> ((swimming))") == ErrorCode::kOutOfVocabulary);
  CHECK(code_of("Decomposition: <<CalculateDuration>> ((walking)) [[yesterday]] [[today]]") == ErrorCode::kParse);
  CHECK(code_of("Decomposition: <<DetectActivity>> [[after step 1]]") == ErrorCode::kParse);
  CHECK(code_of("Decomposition: <<CalculateDuration>> ((walking)) {{noon}}") == ErrorCode::kParse);
  CHECK(code_of("Decomposition: <<CalculateDuration>>") == ErrorCode::kParse);
}

TEST_CASE("template library") {
  const TemplateLibrary& lib = default_templates();
  CHECK(lib.size() == 12);
  CHECK_NOTHROW(check_library(lib));
  const TemplateLibrary from_disk = load_templates(std::filesystem::path(TSQA_SOURCE_DIR) / "templates");
  REQUIRE(from_disk.size() == lib.size());
  for (std::size_t i = 0; i < lib.size(); ++i) CHECK(from_disk[i].question == lib[i].question);
  CHECK_THROWS_AS(parse_templates("Question: q\nReasoning: r\n", QuestionCategory::Counting), Error);
  CHECK_THROWS_AS(parse_templates("Banana: q\n", QuestionCategory::Counting), Error);
  TemplateLibrary short_lib(lib.begin(), lib.begin() + 11);
  CHECK_THROWS_AS(check_library(short_lib), Error);
}

TEST_CASE("every template decomposition agrees with the rule path") {
  const Lexicon& lx = lexicon();
  for (const SolutionTemplate& t : default_templates()) {
    INFO(t.question);
    const auto parsed = parse_llm_decomposition("Decomposition: " + t.decomposition, lx);
    const auto rules = decompose_rules(t.question, lx);
    CHECK(rules.category == t.category);
    CHECK(dump(parsed.specs) == dump(rules.specs));
  }
}

TEST_CASE("prompt contains the category templates and the function list") {
  const TemplateLibrary& lib = default_templates();
  const std::string q = "How long did I walk yesterday?";
  const std::string p = build_prompt(q, lib, QuestionCategory::TimeQuery);
  CHECK(p == build_prompt(q, lib, QuestionCategory::TimeQuery));
  std::size_t questions = 0;
  for (std::size_t at = p.find("Question: "); at != std::string::npos; at = p.find("Question: ", at + 1)) ++questions;
  CHECK(questions == 3);
  for (const SolutionTemplate& t : lib) {
    CHECK((p.find(t.question) != std::string::npos) == (t.category == QuestionCategory::TimeQuery));
  }
  for (QueryFunction f : kAllFunctions) CHECK(p.find(std::string(function_name(f))) != std::string::npos);
  CHECK(p.substr(p.size() - 10) == "Reasoning:");
  CHECK(p.find("Question: " + q) != std::string::npos);
}

TEST_CASE("grammar questions round trip through the rule path") {
  const Lexicon& lx = lexicon();
  int total = 0;
  for (QuestionCategory c : kAllCategories) {
    const auto samples = generate_questions(lx, c, 120, 7 + static_cast<int>(c));
    REQUIRE(samples.size() == 120);
    for (const GrammarSample& g : samples) {
      INFO(g.question);
      const auto r = decompose_rules(g.question, lx);
      CHECK(r.category == c);
      CHECK(dump(r.specs) == dump(g.specs));
      ++total;
    }
  }
  CHECK(total == 720);
  CHECK(generate_questions(lx, QuestionCategory::Counting, 5, 1)[3].question ==
        generate_questions(lx, QuestionCategory::Counting, 5, 1)[3].question);
}

}  // namespace
}  // namespace tsqa
