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

#ifndef TSQA_DECOMPOSER_HPP_
#define TSQA_DECOMPOSER_HPP_

// Question decomposition into QuerySpecs: a keyword category classifier, a
// rule grammar, and an LLM prompt path with solution templates and marked-up
// responses.
//
// Markers: <<Function>>, ((context)), [[date scope]], {{time of day}}.

#include <cstdint>
#include <array>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsqa/query.hpp"
#include "tsqa/timeline.hpp"

namespace tsqa {

enum class QuestionCategory { TimeCompare, DayQuery, TimeQuery, Counting, Existence, ActionQuery };

inline constexpr std::array<QuestionCategory, 6> kAllCategories = {
    QuestionCategory::TimeCompare, QuestionCategory::DayQuery,  QuestionCategory::TimeQuery,
    QuestionCategory::Counting,    QuestionCategory::Existence, QuestionCategory::ActionQuery};

std::string_view category_name(QuestionCategory c);
std::optional<QuestionCategory> parse_category(std::string_view name);

// Replaceable question-type classifier.
class CategoryClassifier {
 public:
  virtual ~CategoryClassifier() = default;
  virtual QuestionCategory classify(std::string_view question) const = 0;
};

class RuleClassifier : public CategoryClassifier {
 public:
  QuestionCategory classify(std::string_view question) const override;
};

QuestionCategory classify_category(std::string_view question);

// Surface form -> vocabulary phrase.
using SynonymTable = std::map<std::string, std::string>;

// Tab-separated "surface<TAB>phrase" lines; '#' starts a comment line.
SynonymTable parse_synonyms(std::istream& in);
SynonymTable load_synonyms(const std::filesystem::path& path);
const SynonymTable& default_synonyms();

// Word-sequence lookup of vocabulary phrases and their synonyms.
class Lexicon {
 public:
  Lexicon(const LabelVocabulary& vocab, const SynonymTable& synonyms);

  struct Match {
    std::size_t begin = 0;  // token range
    std::size_t end = 0;
    std::string phrase;     // vocabulary phrase
  };

  // Non-overlapping longest matches scanning left to right, skipping tokens
  // flagged in `blocked`.
  std::vector<Match> find_all(const std::vector<std::string>& tokens, const std::vector<bool>& blocked = {}) const;

  // Whole-text lookup of a phrase or synonym.
  std::optional<std::string> resolve(std::string_view phrase) const;

  const LabelVocabulary& vocabulary() const { return vocab_; }
  // Surface forms (including the phrase itself) for a vocabulary phrase.
  std::vector<std::string> surfaces(std::string_view phrase) const;

 private:
  const LabelVocabulary& vocab_;
  std::map<std::vector<std::string>, std::string> forms_;
  std::size_t longest_ = 0;
};

enum class DecompositionSource { Rules, Llm };

struct DecompositionResult {
  std::vector<QuerySpec> specs;
  std::string reasoning;
  DecompositionSource source = DecompositionSource::Rules;
  QuestionCategory category = QuestionCategory::TimeQuery;

  nlohmann::json to_json() const;
};

// Deterministic grammar path. Scopes stay symbolic and resolve at execution.
DecompositionResult decompose_rules(std::string_view question, const Lexicon& lexicon,
                                    const CategoryClassifier& classifier = RuleClassifier());

// Parses a date phrase such as "last week", "on Tuesday", "each day last
// week" or "after step 1". Sets per_day for "each day".
struct ParsedDate {
  TimeScope scope;
  bool per_day = false;
};
ParsedDate parse_date_phrase(std::string_view phrase);

struct SolutionTemplate {
  QuestionCategory category = QuestionCategory::TimeQuery;
  std::string question;
  std::string reasoning;
  std::string decomposition;
};

using TemplateLibrary = std::vector<SolutionTemplate>;

// Blocks of "Question:", "Reasoning:", "Decomposition:" lines separated by "---".
TemplateLibrary parse_templates(std::string_view text, QuestionCategory category);
// The six category files from a directory (time_compare.txt, ...).
TemplateLibrary load_templates(const std::filesystem::path& dir);
const TemplateLibrary& default_templates();
// Throws unless every category has exactly two templates.
void check_library(const TemplateLibrary& library);
std::string_view template_file_stem(QuestionCategory c);

std::string build_prompt(std::string_view question, const TemplateLibrary& library, QuestionCategory category);

// Reads marked fields after the last "Decomposition:" (or the whole text).
DecompositionResult parse_llm_decomposition(std::string_view text, const Lexicon& lexicon);

// Grammar-generated question with the specs it encodes.
struct GrammarSample {
  std::string question;
  QuestionCategory category = QuestionCategory::TimeQuery;
  std::vector<QuerySpec> specs;
};

std::vector<GrammarSample> generate_questions(const Lexicon& lexicon, QuestionCategory category, int count,
                                              std::uint64_t seed);

}  // namespace tsqa

#endif  // TSQA_DECOMPOSER_HPP_
