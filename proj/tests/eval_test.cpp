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

#include "tsqa/eval.hpp"

#include <random>
#include <sstream>

#include "doctest.h"
#include "tsqa/error.hpp"

namespace tsqa {
namespace {

TEST_CASE("rouge goldens") {
  CHECK(rouge_n("the cat sat", "the dog sat", 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(rouge_n("the cat sat", "the dog sat", 2) == doctest::Approx(0.0));
  CHECK(rouge_l("a b c d", "a c b d") == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(rouge_n("You spent 2 hours walking.", "you spent 2 HOURS walking", 1) == 1.0);
  CHECK(rouge_n("x y z", "x y z", 2) == 1.0);
  CHECK(rouge_l("x y z", "x y z") == 1.0);
  CHECK(rouge_n("", "a", 1) == 0.0);
  CHECK(rouge_n("a", "", 1) == 0.0);
  CHECK(rouge_l("a b", "c d") == 0.0);
  CHECK_THROWS_AS(rouge_n("a", "a", 3), Error);
}

TEST_CASE("rouge clips repeated n-grams") {
  // candidate "the the the" against "the cat": overlap 1, P = 1/3, R = 1/2
  CHECK(rouge_n("the the the", "the cat", 1) == doctest::Approx(0.4));
}

TEST_CASE("rouge scores are bounded and symmetric in F1") {
  std::mt19937_64 rng(3);
  const std::vector<std::string> words = {"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string x, y;
    for (int i = 0; i < 1 + static_cast<int>(rng() % 8); ++i) x += words[rng() % 5] + " ";
    for (int i = 0; i < 1 + static_cast<int>(rng() % 8); ++i) y += words[rng() % 5] + " ";
    for (int n : {1, 2}) {
      const double v = rouge_n(x, y, n);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      CHECK(v == doctest::Approx(rouge_n(y, x, n)));
    }
    CHECK(rouge_l(x, y) == doctest::Approx(rouge_l(y, x)));
    CHECK(rouge_l(x, y) <= 1.0);
  }
}

TEST_CASE("short answer metrics") {
  auto m = short_metrics("saturday", "Saturday");
  CHECK(m.exact);
  CHECK(m.contains);
  m = short_metrics("You spent 40 minutes", "40 minutes");
  CHECK_FALSE(m.exact);
  CHECK(m.contains);
  m = short_metrics("3 hours 50 min", "4 hours");
  CHECK_FALSE(m.exact);
  CHECK_FALSE(m.contains);
  m = short_metrics("  Yes!  ", "yes");
  CHECK(m.exact);
  // appending the truth always makes it contained
  CHECK(short_metrics("whatever text " + std::string("2 days"), "2 days").contains);
}

TEST_CASE("multiple choice accuracy") {
  const std::vector<std::string> c = {"Monday", "Tuesday", "Friday", "Wednesday"};
  CHECK(mc_accuracy("D", c, 3));
  CHECK(mc_accuracy("D. Wednesday", c, 3));
  CHECK(mc_accuracy("It was on Wednesday.", c, 3));
  CHECK_FALSE(mc_accuracy("C", c, 3));
  CHECK_FALSE(mc_accuracy("Wednesday or Friday", c, 3));
  CHECK_FALSE(mc_accuracy("no idea", c, 3));
  CHECK_THROWS_AS(mc_accuracy("A", {"x"}, 0), Error);
}

TEST_CASE("QA JSON lines round trip and validation") {
  QaRecord r;
  r.question = "Did I cook today?";
  r.full_answer = "Yes, you were cooking for 20 minutes today.";
  r.short_answer = "Yes";
  r.choices = std::vector<std::string>{"Yes", "No", "Only once", "Not sure"};
  r.correct_choice = 0;
  r.user_id = "u1";
  r.now = 1443657599;
  r.category = "Existence";
  QaRecord plain;
  plain.question = "How long did I walk?";
  plain.short_answer = "5 minutes";
  std::stringstream ss;
  write_qa_jsonl(ss, {r, plain});
  const auto back = read_qa_jsonl(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].to_json() == r.to_json());
  CHECK_FALSE(back[1].choices);

  std::istringstream bad("{\"question\": \"q\", \"choices\": [\"a\",\"b\",\"c\",\"d\"]}\n");
  CHECK_THROWS_AS(read_qa_jsonl(bad), Error);
  std::istringstream garbage("{not json\n");
  CHECK_THROWS_AS(read_qa_jsonl(garbage), Error);
}

TEST_CASE("evaluate aggregates and records failures") {
  std::vector<QaRecord> recs(3);
  recs[0].question = "q0";
  recs[0].full_answer = "You spent 5 minutes walking.";
  recs[0].short_answer = "5 minutes";
  recs[0].category = "TimeQuery";
  recs[1].question = "q1";
  recs[1].full_answer = "Yes, you did.";
  recs[1].short_answer = "Yes";
  recs[1].choices = std::vector<std::string>{"Yes", "No", "Maybe", "Twice"};
  recs[1].correct_choice = 0;
  recs[1].category = "Existence";
  recs[2].question = "q2";
  recs[2].short_answer = "Monday";
  recs[2].category = "DayQuery";

  const auto perfect = evaluate(recs, [](const QaRecord& r) {
    if (r.question == "q2") throw Error(ErrorCode::kDecomposition, "no context");
    return GeneratedAnswer{r.full_answer, r.short_answer};
  });
  CHECK(perfect.failures == 1);
  CHECK(perfect.short_exact == doctest::Approx(2.0 / 3.0));
  REQUIRE(perfect.mc_accuracy);
  CHECK(*perfect.mc_accuracy == 1.0);
  CHECK(perfect.rows[2].error);
  CHECK(perfect.short_exact_by_category.at("DayQuery") == 0.0);
  CHECK(perfect.to_json()["failures"] == 1);
  CHECK(perfect.table().find("short_exact") != std::string::npos);

  recs.pop_back();
  const auto all = evaluate(recs, [](const QaRecord& r) { return GeneratedAnswer{r.full_answer, r.short_answer}; });
  CHECK(all.rouge1 == 1.0);
  CHECK(all.rouge2 == 1.0);
  CHECK(all.short_exact == 1.0);
  CHECK(all.short_contains == 1.0);
  CHECK_THROWS_AS(evaluate({}, [](const QaRecord&) { return GeneratedAnswer{}; }), Error);
}

TEST_CASE("evaluation is order independent") {
  std::vector<QaRecord> recs;
  for (int i = 0; i < 20; ++i) {
    QaRecord r;
    r.question = "q" + std::to_string(i);
    r.full_answer = "answer number " + std::to_string(i % 3);
    r.short_answer = std::to_string(i % 3);
    recs.push_back(r);
  }
  auto answer = [](const QaRecord& r) {
    return GeneratedAnswer{"answer number 1", r.question.size() % 2 ? "1" : "2"};
  };
  const auto a = evaluate(recs, answer);
  std::mt19937 rng(1);
  std::shuffle(recs.begin(), recs.end(), rng);
  const auto b = evaluate(recs, answer);
  CHECK(a.rouge1 == doctest::Approx(b.rouge1).epsilon(1e-12));
  CHECK(a.short_exact == doctest::Approx(b.short_exact).epsilon(1e-12));
}

}  // namespace
}  // namespace tsqa
