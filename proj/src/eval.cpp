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

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tsqa/error.hpp"
#include "tsqa/text.hpp"

namespace tsqa {
namespace {

using Tokens = std::vector<std::string>;

double f1(double overlap, std::size_t cand, std::size_t ref) {
  if (cand == 0 || ref == 0 || overlap == 0) return 0.0;
  const double p = overlap / static_cast<double>(cand);
  const double r = overlap / static_cast<double>(ref);
  return 2 * p * r / (p + r);
}

std::map<Tokens, int> ngrams(const Tokens& t, int n) {
  std::map<Tokens, int> out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= t.size(); ++i) {
    ++out[Tokens(t.begin() + static_cast<std::ptrdiff_t>(i), t.begin() + static_cast<std::ptrdiff_t>(i) + n)];
  }
  return out;
}

double mean(double sum, std::size_t n) { return n == 0 ? 0.0 : sum / static_cast<double>(n); }

}  // namespace

void QaRecord::validate() const {
  if (question.empty()) throw Error(ErrorCode::kFormat, "QA record has an empty question");
  if (choices.has_value() != correct_choice.has_value()) {
    throw Error(ErrorCode::kFormat, "QA record must carry both choices and correct_choice or neither");
  }
  if (choices) {
    if (choices->size() != 4) throw Error(ErrorCode::kFormat, "QA record needs exactly 4 choices");
    if (*correct_choice < 0 || *correct_choice >= 4) throw Error(ErrorCode::kFormat, "correct_choice out of range");
  }
}

nlohmann::json QaRecord::to_json() const {
  nlohmann::json j = {{"question", question}, {"full_answer", full_answer}, {"short_answer", short_answer},
                      {"user_id", user_id},   {"now", now}};
  if (choices) {
    j["choices"] = *choices;
    j["correct_choice"] = *correct_choice;
  }
  if (!category.empty()) j["category"] = category;
  return j;
}

QaRecord QaRecord::from_json(const nlohmann::json& j) {
  QaRecord r;
  try {
    r.question = j.at("question").get<std::string>();
    r.full_answer = j.value("full_answer", "");
    r.short_answer = j.value("short_answer", "");
    r.user_id = j.value("user_id", "");
    r.now = j.value("now", std::int64_t{0});
    r.category = j.value("category", "");
    if (j.contains("choices")) r.choices = j.at("choices").get<std::vector<std::string>>();
    if (j.contains("correct_choice")) r.correct_choice = j.at("correct_choice").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad QA record: ") + e.what());
  }
  r.validate();
  return r;
}

std::vector<QaRecord> read_qa_jsonl(std::istream& in) {
  std::vector<QaRecord> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kFormat, "QA line " + std::to_string(number) + ": " + e.what());
    }
    out.push_back(QaRecord::from_json(j));
  }
  return out;
}

std::vector<QaRecord> load_qa(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_qa_jsonl(in);
}

void write_qa_jsonl(std::ostream& out, const std::vector<QaRecord>& records) {
  for (const QaRecord& r : records) out << r.to_json().dump() << '\n';
}

void save_qa(const std::filesystem::path& path, const std::vector<QaRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_qa_jsonl(out, records);
}

double rouge_n(std::string_view candidate, std::string_view reference, int n) {
  if (n != 1 && n != 2) throw Error(ErrorCode::kPrecondition, "rouge_n supports n = 1 or 2");
  const auto c = ngrams(text::tokenize(candidate), n);
  const auto r = ngrams(text::tokenize(reference), n);
  std::size_t nc = 0, nr = 0;
  double overlap = 0;
  for (const auto& [g, k] : c) {
    nc += static_cast<std::size_t>(k);
    auto it = r.find(g);
    if (it != r.end()) overlap += std::min(k, it->second);
  }
  for (const auto& [g, k] : r) nr += static_cast<std::size_t>(k);
  return f1(overlap, nc, nr);
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const Tokens c = text::tokenize(candidate);
  const Tokens r = text::tokenize(reference);
  std::vector<std::size_t> prev(r.size() + 1, 0), cur(r.size() + 1, 0);
  for (std::size_t i = 1; i <= c.size(); ++i) {
    for (std::size_t j = 1; j <= r.size(); ++j) {
      cur[j] = c[i - 1] == r[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return f1(static_cast<double>(prev[r.size()]), c.size(), r.size());
}

ShortMatch short_metrics(std::string_view generated, std::string_view truth) {
  const std::string g = text::normalize_answer(generated);
  const std::string t = text::normalize_answer(truth);
  return {g == t, g.find(t) != std::string::npos};
}

bool mc_accuracy(std::string_view answer, const std::vector<std::string>& choices, int correct_choice) {
  if (choices.size() != 4) throw Error(ErrorCode::kPrecondition, "multiple choice needs 4 choices");
  if (correct_choice < 0 || correct_choice >= 4) throw Error(ErrorCode::kPrecondition, "correct_choice out of range");
  const std::string a = text::normalize_answer(answer);
  const std::string letter(1, static_cast<char>('a' + correct_choice));
  const auto& truth = choices[static_cast<std::size_t>(correct_choice)];
  if (a == letter || a == letter + " " + text::normalize_answer(truth)) return true;
  const Tokens tokens = text::tokenize(answer);
  for (std::size_t i = 0; i < choices.size(); ++i) {
    const bool named = text::contains_word_sequence(tokens, text::tokenize(choices[i]));
    if (named != (static_cast<int>(i) == correct_choice)) return false;
  }
  return true;
}

EvalReport evaluate(const std::vector<QaRecord>& records, const Answerer& answer) {
  if (records.empty()) throw Error(ErrorCode::kPrecondition, "QA set is empty");
  EvalReport rep;
  double r1 = 0, r2 = 0, rl = 0, ex = 0, co = 0, mc = 0;
  std::size_t mc_n = 0;
  std::map<std::string, std::pair<double, std::size_t>> by_cat;
  for (const QaRecord& rec : records) {
    EvalRow row;
    row.question = rec.question;
    row.category = rec.category;
    row.truth_short = rec.short_answer;
    try {
      const GeneratedAnswer g = answer(rec);
      row.generated_full = g.full_answer;
      row.generated_short = g.short_answer;
      row.rouge1 = rouge_n(g.full_answer, rec.full_answer, 1);
      row.rouge2 = rouge_n(g.full_answer, rec.full_answer, 2);
      row.rouge_l = rouge_l(g.full_answer, rec.full_answer);
      const ShortMatch m = short_metrics(g.short_answer, rec.short_answer);
      row.exact = m.exact;
      row.contains = m.contains;
      if (rec.choices) row.mc_correct = mc_accuracy(g.short_answer, *rec.choices, *rec.correct_choice);
    } catch (const std::exception& e) {
      row.error = e.what();
      if (rec.choices) row.mc_correct = false;
      ++rep.failures;
    }
    r1 += row.rouge1;
    r2 += row.rouge2;
    rl += row.rouge_l;
    ex += row.exact;
    co += row.contains;
    if (row.mc_correct) {
      mc += *row.mc_correct;
      ++mc_n;
    }
    auto& [sum, n] = by_cat[row.category];
    sum += row.exact;
    ++n;
    rep.rows.push_back(std::move(row));
  }
  const std::size_t n = records.size();
  rep.rouge1 = mean(r1, n);
  rep.rouge2 = mean(r2, n);
  rep.rouge_l = mean(rl, n);
  rep.short_exact = mean(ex, n);
  rep.short_contains = mean(co, n);
  if (mc_n > 0) rep.mc_accuracy = mean(mc, mc_n);
  for (const auto& [cat, v] : by_cat) rep.short_exact_by_category[cat] = mean(v.first, v.second);
  return rep;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const EvalRow& r : rows) {
    nlohmann::json j = {{"question", r.question},        {"category", r.category}, {"generated_full", r.generated_full},
                        {"generated_short", r.generated_short}, {"truth_short", r.truth_short}, {"rouge1", r.rouge1},
                        {"rouge2", r.rouge2},            {"rougeL", r.rouge_l},   {"exact", r.exact},
                        {"contains", r.contains}};
    if (r.mc_correct) j["mc_correct"] = *r.mc_correct;
    if (r.error) j["error"] = *r.error;
    rows_j.push_back(std::move(j));
  }
  nlohmann::json j = {{"rouge1", rouge1},
                      {"rouge2", rouge2},
                      {"rougeL", rouge_l},
                      {"short_exact", short_exact},
                      {"short_contains", short_contains},
                      {"mc_accuracy", mc_accuracy ? nlohmann::json(*mc_accuracy) : nlohmann::json(nullptr)},
                      {"records", rows.size()},
                      {"failures", failures},
                      {"short_exact_by_category", short_exact_by_category},
                      {"short_answer_extraction", "regex"},
                      {"rows", rows_j}};
  return j;
}

std::string EvalReport::table() const {
  std::ostringstream s;
  char buf[96];
  auto line = [&](const char* name, double v) {
    std::snprintf(buf, sizeof(buf), "%-16s %.4f\n", name, v);
    s << buf;
  };
  s << "records          " << rows.size() << " (" << failures << " failed)\n";
  line("rouge1", rouge1);
  line("rouge2", rouge2);
  line("rougeL", rouge_l);
  line("short_exact", short_exact);
  line("short_contains", short_contains);
  if (mc_accuracy) line("mc_accuracy", *mc_accuracy);
  for (const auto& [cat, v] : short_exact_by_category) {
    if (!cat.empty()) line(("  " + cat).c_str(), v);
  }
  return s.str();
}

}  // namespace tsqa
