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

#ifndef TSQA_EVAL_HPP_
#define TSQA_EVAL_HPP_

// Answer-quality metrics and batch evaluation over a JSON Lines QA file.
// Tokens are lowercase alphanumeric runs; no stemming.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace tsqa {

struct QaRecord {
  std::string question;
  std::string full_answer;
  std::string short_answer;
  std::optional<std::vector<std::string>> choices;  // exactly 4 when present
  std::optional<int> correct_choice;
  std::string user_id;
  std::int64_t now = 0;
  std::string category;  // optional grouping key for reports

  void validate() const;
  nlohmann::json to_json() const;
  static QaRecord from_json(const nlohmann::json& j);
};

std::vector<QaRecord> read_qa_jsonl(std::istream& in);
std::vector<QaRecord> load_qa(const std::filesystem::path& path);
void write_qa_jsonl(std::ostream& out, const std::vector<QaRecord>& records);
void save_qa(const std::filesystem::path& path, const std::vector<QaRecord>& records);

// F1 over clipped n-gram overlap; n is 1 or 2.
double rouge_n(std::string_view candidate, std::string_view reference, int n);
// F1 over the token-level longest common subsequence.
double rouge_l(std::string_view candidate, std::string_view reference);

struct ShortMatch {
  bool exact = false;
  bool contains = false;
};
ShortMatch short_metrics(std::string_view generated, std::string_view truth);

// Accepts the bare letter, the letter followed by the choice text, or an
// answer naming the correct choice and no other.
bool mc_accuracy(std::string_view answer, const std::vector<std::string>& choices, int correct_choice);

struct GeneratedAnswer {
  std::string full_answer;
  std::string short_answer;
};

// Answers one record; thrown errors are recorded per row.
using Answerer = std::function<GeneratedAnswer(const QaRecord&)>;

struct EvalRow {
  std::string question;
  std::string category;
  std::string generated_full;
  std::string generated_short;
  std::string truth_short;
  double rouge1 = 0;
  double rouge2 = 0;
  double rouge_l = 0;
  bool exact = false;
  bool contains = false;
  std::optional<bool> mc_correct;
  std::optional<std::string> error;
};

struct EvalReport {
  double rouge1 = 0;
  double rouge2 = 0;
  double rouge_l = 0;
  double short_exact = 0;
  double short_contains = 0;
  std::optional<double> mc_accuracy;
  std::size_t failures = 0;
  std::map<std::string, double> short_exact_by_category;
  std::vector<EvalRow> rows;

  nlohmann::json to_json() const;
  std::string table() const;
};

// Metric means over all records; a failed record scores zero everywhere.
// Multiple-choice accuracy uses the generated short answer.
EvalReport evaluate(const std::vector<QaRecord>& records, const Answerer& answer);

}  // namespace tsqa

#endif  // TSQA_EVAL_HPP_
