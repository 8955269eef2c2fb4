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

#include "tsqa/qa_suite.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "tsqa/assembler.hpp"
#include "tsqa/error.hpp"
#include "tsqa/text.hpp"
#include "tsqa/window_index.hpp"

namespace tsqa {
namespace {

bool is_empty_answer(const std::string& s) {
  static const std::set<std::string> kEmpty = {"0 minutes", "No", "Not detected", "0 times",
                                               "0 days",    "No activity detected", "No data"};
  return kEmpty.count(s) > 0;
}

bool overlaps(const std::string& a, const std::string& b) {
  const auto ta = text::tokenize(a);
  const auto tb = text::tokenize(b);
  return text::contains_word_sequence(ta, tb) || text::contains_word_sequence(tb, ta);
}

// Three wrong options that neither contain nor are contained in any other option.
std::vector<std::string> distractors(std::mt19937_64& rng, QuestionCategory category, const std::string& truth,
                                     const LabelVocabulary& vocab) {
  std::vector<std::string> pool;
  switch (category) {
    case QuestionCategory::TimeCompare:
    case QuestionCategory::ActionQuery:
      pool = vocab.phrases();
      if (category == QuestionCategory::ActionQuery) pool.emplace_back("No activity detected");
      break;
    case QuestionCategory::DayQuery:
      for (int d = 0; d < 7; ++d) pool.emplace_back(weekday_name(d));
      break;
    case QuestionCategory::Existence:
      pool = {"Yes", "No", "Only once", "Not sure"};
      break;
    case QuestionCategory::TimeQuery: {
      if (truth.find(':') != std::string::npos || truth == "Not detected") {
        for (int h = 0; h < 24; h += 1 + static_cast<int>(rng() % 3)) {
          pool.push_back(format_clock(static_cast<std::int64_t>(h) * 3600 + static_cast<std::int64_t>(rng() % 60) * 60));
        }
        pool.emplace_back("Not detected");
      } else {
        for (long m : {5L, 20L, 45L, 75L, 100L, 150L, 200L, 260L, 330L, 480L, 610L}) pool.push_back(format_duration(m));
      }
      break;
    }
    case QuestionCategory::Counting: {
      const bool days = truth.find("day") != std::string::npos;
      for (long n = 0; n < 12; ++n) pool.push_back(format_count(n, days ? "day" : "time"));
      break;
    }
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<std::string> out;
  for (const std::string& p : pool) {
    if (out.size() == 3) break;
    if (overlaps(p, truth)) continue;
    if (std::any_of(out.begin(), out.end(), [&](const std::string& o) { return overlaps(o, p); })) continue;
    out.push_back(p);
  }
  if (out.size() != 3) throw Error(ErrorCode::kPrecondition, "not enough distinct options for '" + truth + "'");
  return out;
}

}  // namespace

std::int64_t suite_now(const Timeline& timeline) {
  if (timeline.empty()) throw Error(ErrorCode::kPrecondition, "timeline is empty");
  std::int64_t last = timeline.windows.front().timestamp;
  for (const SensorWindow& w : timeline.windows) last = std::max(last, w.timestamp);
  return day_start(last) + 86400 - 1;
}

std::vector<QaRecord> make_qa_suite(const Timeline& truth, const LabelVocabulary& vocab, const Lexicon& lexicon,
                                    const QaSuiteConfig& config) {
  if (config.per_category < 1) throw Error(ErrorCode::kPrecondition, "per_category must be positive");
  const std::int64_t now = suite_now(truth);
  const std::vector<std::string> users = truth.users();
  const WindowIndex index = WindowIndex::from_timeline(truth);
  const OracleScorer scorer(truth);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<QaRecord> out;
  std::uint64_t draw = 0;
  for (QuestionCategory category : kAllCategories) {
    int made = 0;
    int attempts = 0;
    while (made < config.per_category) {
      if (++attempts > 200 * config.per_category) {
        throw Error(ErrorCode::kPrecondition, "could not generate enough " + std::string(category_name(category)) +
                                                  " questions from this timeline");
      }
      const GrammarSample g = generate_questions(lexicon, category, 1, config.seed * 1000003ULL + draw++).front();
      QueryEnv env;
      env.index = &index;
      env.scorer = &scorer;
      env.vocab = &vocab;
      env.user_id = users[static_cast<std::size_t>(made) % users.size()];
      env.now = now;
      env.options = config.query;
      std::vector<SensorContext> contexts;
      try {
        contexts = execute(g.specs, env);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kScope) throw;
        continue;  // chained question whose anchor never happened
      }
      const AnswerBundle b = assemble_template(category, g.specs, contexts, g.question, vocab);
      if (is_empty_answer(b.short_answer) && unit(rng) >= config.empty_answer_rate) continue;

      QaRecord r;
      r.question = g.question;
      r.full_answer = b.full_answer;
      r.short_answer = b.short_answer;
      r.user_id = *env.user_id;
      r.now = now;
      r.category = std::string(category_name(category));
      if (config.multiple_choice) {
        std::vector<std::string> choices = distractors(rng, category, b.short_answer, vocab);
        const int correct = static_cast<int>(rng() % 4);
        choices.insert(choices.begin() + correct, b.short_answer);
        r.choices = choices;
        r.correct_choice = correct;
      }
      r.validate();
      out.push_back(std::move(r));
      ++made;
    }
  }
  return out;
}

}  // namespace tsqa
