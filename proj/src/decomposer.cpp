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

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "tsqa/error.hpp"
#include "tsqa/resources.hpp"
#include "tsqa/text.hpp"

namespace tsqa {
namespace {

using Tokens = std::vector<std::string>;

constexpr std::array<std::string_view, 6> kCategoryNames = {"TimeCompare", "DayQuery",  "TimeQuery",
                                                            "Counting",    "Existence", "ActionQuery"};
constexpr std::array<std::string_view, 6> kTemplateStems = {"time_compare", "day_query", "time_query",
                                                            "counting",     "existence", "action_query"};

bool has_sequence(const Tokens& t, std::initializer_list<std::string_view> seq) {
  if (seq.size() > t.size()) return false;
  for (std::size_t i = 0; i + seq.size() <= t.size(); ++i) {
    std::size_t k = 0;
    for (std::string_view s : seq) {
      if (t[i + k] != s) break;
      ++k;
    }
    if (k == seq.size()) return true;
  }
  return false;
}

bool starts_with(const Tokens& t, std::initializer_list<std::string_view> seq) {
  if (seq.size() > t.size()) return false;
  std::size_t k = 0;
  for (std::string_view s : seq) {
    if (t[k++] != s) return false;
  }
  return true;
}

std::optional<TimeOfDay> tod_word(const std::string& w) {
  if (w == "morning") return TimeOfDay::Morning;
  if (w == "afternoon") return TimeOfDay::Afternoon;
  if (w == "evening") return TimeOfDay::Evening;
  if (w == "night") return TimeOfDay::Night;
  return std::nullopt;
}

// Date and time-of-day words found in a token list.
struct ScopeScan {
  std::optional<TimeScope> date;
  TimeOfDay tod = TimeOfDay::Any;
  bool per_day = false;
  std::vector<bool> consumed;
};

ScopeScan scan_scope(const Tokens& t, ErrorCode on_error) {
  ScopeScan s;
  s.consumed.assign(t.size(), false);
  auto set_date = [&](TimeScope scope) {
    if (s.date) throw Error(on_error, "more than one date scope");
    s.date = scope;
  };
  auto set_tod = [&](TimeOfDay tod) {
    if (s.tod != TimeOfDay::Any) throw Error(on_error, "more than one time of day");
    s.tod = tod;
  };
  auto take = [&](std::size_t i, std::size_t n) {
    for (std::size_t k = i; k < i + n; ++k) s.consumed[k] = true;
    return n;
  };
  auto at = [&](std::size_t i) -> std::string { return i < t.size() ? t[i] : std::string(); };
  for (std::size_t i = 0; i < t.size();) {
    const std::string w = t[i];
    std::size_t used = 0;
    if (w == "yesterday") {
      set_date(TimeScope::relative(RelativeSpan::Yesterday));
      used = take(i, 1);
    } else if (w == "today") {
      set_date(TimeScope::relative(RelativeSpan::Today));
      used = take(i, 1);
    } else if (w == "this" && tod_word(at(i + 1))) {
      set_date(TimeScope::relative(RelativeSpan::Today));
      set_tod(*tod_word(at(i + 1)));
      used = take(i, 2);
    } else if (w == "last" && at(i + 1) == "week") {
      set_date(TimeScope::relative(RelativeSpan::LastWeek));
      used = take(i, 2);
    } else if (w == "last" && parse_weekday(at(i + 1))) {
      set_date(TimeScope::named_day(*parse_weekday(at(i + 1)), true));
      used = take(i, 2);
    } else if (w == "on" && parse_weekday(at(i + 1))) {
      set_date(TimeScope::named_day(*parse_weekday(at(i + 1)), false));
      used = take(i, 2);
    } else if (parse_weekday(w)) {
      set_date(TimeScope::named_day(*parse_weekday(w), false));
      used = take(i, 1);
    } else if (w == "each" && at(i + 1) == "day") {
      s.per_day = true;
      used = take(i, 2);
    } else if (w == "in" && at(i + 1) == "the" && tod_word(at(i + 2))) {
      set_tod(*tod_word(at(i + 2)));
      used = take(i, 3);
    } else if (w == "at" && at(i + 1) == "night") {
      set_tod(TimeOfDay::Night);
      used = take(i, 2);
    } else if (tod_word(w)) {
      set_tod(*tod_word(w));
      used = take(i, 1);
    }
    i += used == 0 ? 1 : used;
  }
  return s;
}

TimeScope finish_scope(const ScopeScan& s) {
  TimeScope scope = s.date.value_or(TimeScope::all());
  scope.time_of_day = s.tod;
  return scope;
}

QuerySpec make_spec(QueryFunction f, std::vector<std::string> contexts, TimeScope scope, bool per_day = false) {
  QuerySpec q;
  q.function = f;
  q.contexts = std::move(contexts);
  q.scope = scope;
  q.per_day = per_day;
  return q;
}

std::string read_all(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view resource(std::string_view name) {
  for (const resources::Resource& r : resources::all()) {
    if (r.name == name) return r.content;
  }
  throw Error(ErrorCode::kNotFound, "missing embedded resource " + std::string(name));
}

}  // namespace

std::string_view category_name(QuestionCategory c) { return kCategoryNames[static_cast<std::size_t>(c)]; }

std::optional<QuestionCategory> parse_category(std::string_view name) {
  for (QuestionCategory c : kAllCategories) {
    if (category_name(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view template_file_stem(QuestionCategory c) { return kTemplateStems[static_cast<std::size_t>(c)]; }

// ---------------------------------------------------------------------------
// Classifier

QuestionCategory RuleClassifier::classify(std::string_view question) const {
  const Tokens t = text::tokenize(question);
  const auto more = std::find(t.begin(), t.end(), "more");
  if (more != t.end() && std::find(more, t.end(), "or") != t.end()) return QuestionCategory::TimeCompare;
  if (has_sequence(t, {"which", "day"}) || has_sequence(t, {"what", "day"})) return QuestionCategory::DayQuery;
  if (has_sequence(t, {"how", "long"}) || has_sequence(t, {"how", "much", "time"})) return QuestionCategory::TimeQuery;
  if (has_sequence(t, {"how", "often"}) || has_sequence(t, {"how", "many", "times"}) ||
      has_sequence(t, {"how", "many", "days"})) {
    return QuestionCategory::Counting;
  }
  if (starts_with(t, {"did", "i"}) || starts_with(t, {"was", "i"}) || starts_with(t, {"have", "i"})) {
    return QuestionCategory::Existence;
  }
  if (has_sequence(t, {"what", "did", "i", "do"}) || has_sequence(t, {"what", "was", "i", "doing"})) {
    return QuestionCategory::ActionQuery;
  }
  return QuestionCategory::TimeQuery;
}

QuestionCategory classify_category(std::string_view question) { return RuleClassifier().classify(question); }

// ---------------------------------------------------------------------------
// Synonyms and lexicon

SynonymTable parse_synonyms(std::istream& in) {
  SynonymTable table;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kFormat, "synonym line " + std::to_string(number) + " has no tab separator");
    }
    const std::string key = text::join(text::tokenize(line.substr(0, tab)), " ");
    const std::string value = text::join(text::tokenize(line.substr(tab + 1)), " ");
    if (key.empty() || value.empty()) {
      throw Error(ErrorCode::kFormat, "synonym line " + std::to_string(number) + " has an empty field");
    }
    table[key] = value;
  }
  return table;
}

SynonymTable load_synonyms(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return parse_synonyms(in);
}

const SynonymTable& default_synonyms() {
  static const SynonymTable kTable = [] {
    std::istringstream in{std::string(resource("synonyms.tsv"))};
    return parse_synonyms(in);
  }();
  return kTable;
}

Lexicon::Lexicon(const LabelVocabulary& vocab, const SynonymTable& synonyms) : vocab_(vocab) {
  for (const std::string& p : vocab.phrases()) {
    Tokens t = text::tokenize(p);
    if (t.empty()) continue;
    longest_ = std::max(longest_, t.size());
    forms_[t] = p;
  }
  for (const auto& [surface, target] : synonyms) {
    // targets are compared in normalized token form
    std::optional<std::string> phrase;
    for (const std::string& p : vocab.phrases()) {
      if (text::join(text::tokenize(p), " ") == target) phrase = p;
    }
    if (!phrase) continue;
    Tokens t = text::tokenize(surface);
    if (forms_.count(t)) continue;  // vocabulary phrases win
    longest_ = std::max(longest_, t.size());
    forms_[t] = *phrase;
  }
}

std::vector<Lexicon::Match> Lexicon::find_all(const Tokens& tokens, const std::vector<bool>& blocked) const {
  std::vector<Match> out;
  auto is_blocked = [&](std::size_t i) { return i < blocked.size() && blocked[i]; };
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool hit = false;
    for (std::size_t len = std::min(longest_, tokens.size() - i); len >= 1 && !hit; --len) {
      bool free = true;
      for (std::size_t k = i; k < i + len; ++k) free = free && !is_blocked(k);
      if (!free) continue;
      auto it = forms_.find(Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(i + len)));
      if (it != forms_.end()) {
        out.push_back({i, i + len, it->second});
        i += len;
        hit = true;
      }
    }
    if (!hit) ++i;
  }
  return out;
}

std::optional<std::string> Lexicon::resolve(std::string_view phrase) const {
  auto it = forms_.find(text::tokenize(phrase));
  if (it == forms_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Lexicon::surfaces(std::string_view phrase) const {
  std::vector<std::string> out = {std::string(phrase)};
  for (const auto& [tokens, p] : forms_) {
    const std::string s = text::join(tokens, " ");
    if (p == phrase && s != phrase) out.push_back(s);
  }
  return out;
}

nlohmann::json DecompositionResult::to_json() const {
  return {{"source", source == DecompositionSource::Rules ? "rules" : "llm"},
          {"category", category_name(category)},
          {"reasoning", reasoning},
          {"specs", specs_to_json(specs)}};
}

// ---------------------------------------------------------------------------
// Rule path

DecompositionResult decompose_rules(std::string_view question, const Lexicon& lexicon,
                                    const CategoryClassifier& classifier) {
  if (text::trim(question).empty()) throw Error(ErrorCode::kDecomposition, "empty question");
  const Tokens t = text::tokenize(question);
  DecompositionResult r;
  r.category = classifier.classify(question);
  r.source = DecompositionSource::Rules;
  const ScopeScan scan = scan_scope(t, ErrorCode::kDecomposition);
  const TimeScope scope = finish_scope(scan);
  const std::vector<Lexicon::Match> matches = lexicon.find_all(t, scan.consumed);
  std::vector<std::string> contexts;
  for (const auto& m : matches) contexts.push_back(m.phrase);

  auto need_contexts = [&](std::size_t n) {
    if (contexts.size() < n) {
      throw Error(ErrorCode::kDecomposition,
                  "could not find " + std::string(n > 1 ? "two context phrases" : "a known context phrase") +
                      " in the question");
    }
  };

  switch (r.category) {
    case QuestionCategory::TimeCompare:
      need_contexts(2);
      r.specs = {make_spec(QueryFunction::CalculateDuration, {contexts[0]}, scope),
                 make_spec(QueryFunction::CalculateDuration, {contexts[1]}, scope)};
      break;
    case QuestionCategory::DayQuery:
      need_contexts(1);
      r.specs = {make_spec(QueryFunction::CalculateDuration, contexts, scope, true)};
      break;
    case QuestionCategory::TimeQuery: {
      need_contexts(1);
      QueryFunction f = QueryFunction::CalculateDuration;
      if (!t.empty() && t[0] == "when") {
        for (std::size_t i = 0; i < t.size(); ++i) {
          if (scan.consumed[i]) continue;
          if (t[i] == "first") {
            f = QueryFunction::DetectFirstTime;
            break;
          }
          if (t[i] == "last") {
            f = QueryFunction::DetectLastTime;
            break;
          }
        }
      }
      r.specs = {make_spec(f, contexts, scope)};
      break;
    }
    case QuestionCategory::Counting:
      need_contexts(1);
      r.specs = {make_spec(has_sequence(t, {"how", "many", "days"}) ? QueryFunction::CountingDays
                                                                     : QueryFunction::CountingFrequency,
                           contexts, scope)};
      break;
    case QuestionCategory::Existence:
      need_contexts(1);
      r.specs = {make_spec(QueryFunction::CalculateDuration, contexts, scope)};
      break;
    case QuestionCategory::ActionQuery: {
      std::optional<std::size_t> anchor;
      bool after = true;
      for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        if ((t[i] == "after" || t[i] == "before") && t[i + 1] == "i") {
          anchor = i;
          after = t[i] == "after";
          break;
        }
      }
      if (!anchor) {
        r.specs = {make_spec(QueryFunction::DetectActivity, {}, scope)};
        break;
      }
      auto m = std::find_if(matches.begin(), matches.end(), [&](const auto& x) { return x.begin > *anchor; });
      if (m == matches.end()) {
        throw Error(ErrorCode::kDecomposition, "could not find the reference activity after '" + t[*anchor] + "'");
      }
      r.specs = {make_spec(after ? QueryFunction::DetectLastTime : QueryFunction::DetectFirstTime, {m->phrase}, scope),
                 make_spec(QueryFunction::DetectActivity, {},
                           after ? TimeScope::after_result(0) : TimeScope::before_result(0))};
      break;
    }
  }
  std::vector<std::string> steps;
  for (const QuerySpec& s : r.specs) {
    std::string step = std::string(function_name(s.function));
    if (!s.contexts.empty()) step += " of " + text::join(s.contexts, " and ");
    const std::string where = describe_scope(s.scope);
    if (!where.empty()) step += " " + where;
    if (s.per_day) step += " for each day";
    steps.push_back(step);
  }
  r.reasoning = "The question is a " + std::string(category_name(r.category)) + " question. Steps: " +
                text::join(steps, "; ") + ".";
  return r;
}

// ---------------------------------------------------------------------------
// Date phrases

ParsedDate parse_date_phrase(std::string_view phrase) {
  const Tokens t = text::tokenize(phrase);
  ParsedDate out;
  if (t.size() == 3 && (t[0] == "after" || t[0] == "before") && t[1] == "step") {
    int step = 0;
    try {
      step = std::stoi(t[2]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, "bad step reference in '" + std::string(phrase) + "'");
    }
    if (step < 1) throw Error(ErrorCode::kParse, "step references start at 1");
    out.scope = t[0] == "after" ? TimeScope::after_result(step - 1) : TimeScope::before_result(step - 1);
    return out;
  }
  if (t.empty() || t == Tokens{"all"} || t == Tokens{"all", "time"}) return out;
  const ScopeScan scan = scan_scope(t, ErrorCode::kParse);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!scan.consumed[i]) throw Error(ErrorCode::kParse, "unrecognized date phrase '" + std::string(phrase) + "'");
  }
  out.scope = finish_scope(scan);
  out.per_day = scan.per_day;
  return out;
}

// ---------------------------------------------------------------------------
// Templates and prompt

TemplateLibrary parse_templates(std::string_view text_in, QuestionCategory category) {
  TemplateLibrary out;
  SolutionTemplate cur;
  cur.category = category;
  auto flush = [&] {
    if (cur.question.empty() && cur.reasoning.empty() && cur.decomposition.empty()) return;
    if (cur.question.empty() || cur.reasoning.empty() || cur.decomposition.empty()) {
      throw Error(ErrorCode::kFormat, "template for " + std::string(category_name(category)) +
                                          " lacks a Question, Reasoning or Decomposition line");
    }
    out.push_back(cur);
    cur = SolutionTemplate{};
    cur.category = category;
  };
  std::istringstream in{std::string(text_in)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view l = text::trim(line);
    auto field = [&](std::string_view key, std::string& dst) {
      if (l.substr(0, key.size()) != key) return false;
      dst = std::string(text::trim(l.substr(key.size())));
      return true;
    };
    if (l == "---") {
      flush();
    } else if (l.empty()) {
      continue;
    } else if (!field("Question:", cur.question) && !field("Reasoning:", cur.reasoning) &&
               !field("Decomposition:", cur.decomposition)) {
      throw Error(ErrorCode::kFormat, "unexpected template line '" + std::string(l) + "'");
    }
  }
  flush();
  return out;
}

TemplateLibrary load_templates(const std::filesystem::path& dir) {
  TemplateLibrary out;
  for (QuestionCategory c : kAllCategories) {
    const auto path = dir / (std::string(template_file_stem(c)) + ".txt");
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
    TemplateLibrary part = parse_templates(read_all(in), c);
    out.insert(out.end(), part.begin(), part.end());
  }
  check_library(out);
  return out;
}

const TemplateLibrary& default_templates() {
  static const TemplateLibrary kLibrary = [] {
    TemplateLibrary out;
    for (QuestionCategory c : kAllCategories) {
      TemplateLibrary part = parse_templates(resource(std::string(template_file_stem(c)) + ".txt"), c);
      out.insert(out.end(), part.begin(), part.end());
    }
    check_library(out);
    return out;
  }();
  return kLibrary;
}

void check_library(const TemplateLibrary& library) {
  for (QuestionCategory c : kAllCategories) {
    const auto n = std::count_if(library.begin(), library.end(), [&](const auto& t) { return t.category == c; });
    if (n != 2) {
      throw Error(ErrorCode::kFormat, "category " + std::string(category_name(c)) + " has " + std::to_string(n) +
                                          " templates, expected 2");
    }
  }
}

std::string build_prompt(std::string_view question, const TemplateLibrary& library, QuestionCategory category) {
  std::vector<std::string> names;
  for (QueryFunction f : kAllFunctions) names.emplace_back(function_name(f));
  std::string p;
  p += "You answer questions about a person's daily life recorded by wearable and phone sensors.\n";
  p += "Decompose the question into calls of the available query functions.\n";
  p += "Mark each function name as <<name>>, each context phrase as ((phrase)), each date scope as [[date]] and "
       "each time of day as {{time of day}}.\n";
  p += "Available query functions: " + text::join(names, ", ") + ".\n\n";
  for (const SolutionTemplate& t : library) {
    if (t.category != category) continue;
    p += "Question: " + t.question + "\n";
    p += "Reasoning: " + t.reasoning + "\n";
    p += "Decomposition: " + t.decomposition + "\n\n";
  }
  p += "For the question below, please generate step-by-step explanations before writing the decomposition.\n";
  p += "Question: " + std::string(text::trim(question)) + "\n";
  p += "Reasoning:";
  return p;
}

// ---------------------------------------------------------------------------
// Marker parser

DecompositionResult parse_llm_decomposition(std::string_view text_in, const Lexicon& lexicon) {
  DecompositionResult r;
  r.source = DecompositionSource::Llm;
  std::string_view body = text_in;
  constexpr std::string_view kKey = "Decomposition:";
  const auto key = text_in.rfind(kKey);
  if (key != std::string_view::npos) {
    r.reasoning = std::string(text::trim(text_in.substr(0, key)));
    constexpr std::string_view kReason = "Reasoning:";
    if (r.reasoning.substr(0, kReason.size()) == kReason) r.reasoning = std::string(text::trim(r.reasoning.substr(kReason.size())));
    body = text_in.substr(key + kKey.size());
  }

  struct Open {
    std::string_view open, close;
    char kind;
  };
  constexpr std::array<Open, 4> kMarkers = {{{"<<", ">>", 'F'}, {"((", "))", 'C'}, {"[[", "]]", 'D'}, {"{{", "}}", 'T'}}};

  struct Pending {
    QuerySpec spec;
    bool has_date = false;
    bool has_tod = false;
    TimeOfDay tod = TimeOfDay::Any;
  };
  std::vector<Pending> specs;

  std::size_t i = 0;
  while (i < body.size()) {
    const Open* m = nullptr;
    for (const Open& o : kMarkers) {
      if (body.substr(i, 2) == o.open) m = &o;
      if (body.substr(i, 2) == o.close) {
        throw Error(ErrorCode::kParse, "unbalanced marker '" + std::string(o.close) + "' at offset " + std::to_string(i));
      }
    }
    if (m == nullptr) {
      ++i;
      continue;
    }
    const std::size_t end = body.find(m->close, i + 2);
    if (end == std::string_view::npos) {
      throw Error(ErrorCode::kParse, "unbalanced marker '" + std::string(m->open) + "' at offset " + std::to_string(i));
    }
    const std::string inner(text::trim(body.substr(i + 2, end - i - 2)));
    for (const Open& o : kMarkers) {
      if (inner.find(o.open) != std::string::npos || inner.find(o.close) != std::string::npos) {
        throw Error(ErrorCode::kParse, "nested marker inside '" + inner + "'");
      }
    }
    i = end + 2;
    if (m->kind == 'F') {
      auto f = parse_function(inner);
      if (!f) throw Error(ErrorCode::kParse, "unknown function '" + inner + "'");
      Pending p;
      p.spec.function = *f;
      specs.push_back(p);
      continue;
    }
    if (specs.empty()) throw Error(ErrorCode::kParse, "marked argument '" + inner + "' before any function");
    Pending& p = specs.back();
    if (m->kind == 'C') {
      auto phrase = lexicon.resolve(inner);
      if (!phrase) throw Error(ErrorCode::kOutOfVocabulary, "context '" + inner + "' is not a known label");
      p.spec.contexts.push_back(*phrase);
    } else if (m->kind == 'D') {
      if (p.has_date) throw Error(ErrorCode::kParse, "two date scopes for one function");
      const ParsedDate d = parse_date_phrase(inner);
      const TimeOfDay keep = p.spec.scope.time_of_day;
      p.spec.scope = d.scope;
      if (d.scope.time_of_day == TimeOfDay::Any) p.spec.scope.time_of_day = keep;
      p.spec.per_day = d.per_day;
      p.has_date = true;
    } else {
      if (p.has_tod) throw Error(ErrorCode::kParse, "two times of day for one function");
      auto tod = parse_time_of_day(inner);
      if (!tod) throw Error(ErrorCode::kParse, "unknown time of day '" + inner + "'");
      p.spec.scope.time_of_day = *tod;
      p.has_tod = true;
    }
  }
  if (specs.empty()) throw Error(ErrorCode::kParse, "no marked function in response");
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const QuerySpec& s = specs[k].spec;
    try {
      s.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, "step " + std::to_string(k + 1) + ": " + e.what());
    }
    if (s.scope.result_ref >= static_cast<int>(k)) {
      throw Error(ErrorCode::kParse, "step " + std::to_string(k + 1) + " refers to a step that is not earlier");
    }
    r.specs.push_back(s);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Grammar generator

namespace {

struct ScopeChoice {
  std::string surface;
  TimeScope scope;
};

std::string pick(std::mt19937_64& rng, const std::vector<std::string>& v) { return v[rng() % v.size()]; }

ScopeChoice random_scope_choice(std::mt19937_64& rng, bool multi_day_only) {
  ScopeChoice c;
  const int kind = multi_day_only ? static_cast<int>(rng() % 2) * 3 : static_cast<int>(rng() % 7);
  const int wd = static_cast<int>(rng() % 7);
  const std::string day(weekday_name(wd));
  switch (kind) {
    case 0: c.scope = TimeScope::all(); break;
    case 1: c.surface = "yesterday"; c.scope = TimeScope::relative(RelativeSpan::Yesterday); break;
    case 2: c.surface = "today"; c.scope = TimeScope::relative(RelativeSpan::Today); break;
    case 3: c.surface = "last week"; c.scope = TimeScope::relative(RelativeSpan::LastWeek); break;
    case 4: c.surface = "on " + day; c.scope = TimeScope::named_day(wd, false); break;
    case 5: c.surface = "last " + day; c.scope = TimeScope::named_day(wd, true); break;
    default: c.surface = day; c.scope = TimeScope::named_day(wd, false); break;
  }
  static const std::vector<std::pair<std::string, TimeOfDay>> kTod = {
      {"", TimeOfDay::Any},
      {"", TimeOfDay::Any},
      {"in the morning", TimeOfDay::Morning},
      {"in the afternoon", TimeOfDay::Afternoon},
      {"in the evening", TimeOfDay::Evening},
      {"at night", TimeOfDay::Night},
      {"evening", TimeOfDay::Evening}};
  const auto& [tod_surface, tod] = kTod[rng() % kTod.size()];
  if (!multi_day_only && kind == 2 && tod != TimeOfDay::Any && rng() % 2 == 0) {
    c.surface = "this " + std::string(time_of_day_name(tod));
  } else if (!tod_surface.empty()) {
    c.surface = c.surface.empty() ? tod_surface : c.surface + " " + tod_surface;
  }
  c.scope.time_of_day = tod;
  return c;
}

std::string with_scope(const std::string& stem, const ScopeChoice& s) {
  return (s.surface.empty() ? stem : stem + " " + s.surface) + "?";
}

}  // namespace

std::vector<GrammarSample> generate_questions(const Lexicon& lexicon, QuestionCategory category, int count,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<std::string>& phrases = lexicon.vocabulary().phrases();
  auto context = [&](std::string& phrase) {
    phrase = phrases[rng() % phrases.size()];
    return pick(rng, lexicon.surfaces(phrase));
  };
  std::vector<GrammarSample> out;
  for (int n = 0; n < count; ++n) {
    GrammarSample g;
    g.category = category;
    std::string p1, p2;
    switch (category) {
      case QuestionCategory::TimeCompare: {
        const std::string s1 = context(p1);
        std::string s2 = context(p2);
        while (p2 == p1) s2 = context(p2);
        const ScopeChoice sc = random_scope_choice(rng, false);
        g.question = with_scope("Did I spend more time " + s1 + " or " + s2, sc);
        g.specs = {make_spec(QueryFunction::CalculateDuration, {p1}, sc.scope),
                   make_spec(QueryFunction::CalculateDuration, {p2}, sc.scope)};
        break;
      }
      case QuestionCategory::DayQuery: {
        const std::string s = context(p1);
        const ScopeChoice sc = random_scope_choice(rng, true);
        static const std::vector<std::string> kStems = {"Which day did I spend the most time ",
                                                        "On which day did I spend the most time ", "What day was I "};
        const std::size_t form = rng() % kStems.size();
        g.question = with_scope(kStems[form] + s + (form == 2 ? " the most" : ""), sc);
        g.specs = {make_spec(QueryFunction::CalculateDuration, {p1}, sc.scope, true)};
        break;
      }
      case QuestionCategory::TimeQuery: {
        const std::string s = context(p1);
        const ScopeChoice sc = random_scope_choice(rng, false);
        switch (rng() % 5) {
          case 0: g.question = with_scope("How long was I " + s, sc); break;
          case 1: g.question = with_scope("How much time did I spend " + s, sc); break;
          case 2: g.question = with_scope("How long did I " + s, sc); break;
          case 3:
            g.question = with_scope("When was I first " + s, sc);
            g.specs = {make_spec(QueryFunction::DetectFirstTime, {p1}, sc.scope)};
            break;
          default:
            g.question = with_scope("When was I last " + s, sc);
            g.specs = {make_spec(QueryFunction::DetectLastTime, {p1}, sc.scope)};
            break;
        }
        if (g.specs.empty()) g.specs = {make_spec(QueryFunction::CalculateDuration, {p1}, sc.scope)};
        break;
      }
      case QuestionCategory::Counting: {
        const std::string s = context(p1);
        const ScopeChoice sc = random_scope_choice(rng, false);
        switch (rng() % 4) {
          case 0: g.question = with_scope("How often did I " + s, sc); break;
          case 1: g.question = with_scope("How many times did I " + s, sc); break;
          case 2: g.question = with_scope("How many days was I " + s, sc); break;
          default: g.question = with_scope("How many days did I " + s, sc); break;
        }
        const bool days = g.question.find("How many days") == 0;
        g.specs = {make_spec(days ? QueryFunction::CountingDays : QueryFunction::CountingFrequency, {p1}, sc.scope)};
        break;
      }
      case QuestionCategory::Existence: {
        const std::string s = context(p1);
        const ScopeChoice sc = random_scope_choice(rng, false);
        static const std::vector<std::string> kStems = {"Did I ", "Was I ", "Have I been "};
        g.question = with_scope(kStems[rng() % kStems.size()] + s, sc);
        g.specs = {make_spec(QueryFunction::CalculateDuration, {p1}, sc.scope)};
        break;
      }
      case QuestionCategory::ActionQuery: {
        const ScopeChoice sc = random_scope_choice(rng, false);
        const std::string stem = rng() % 2 == 0 ? "What did I do" : "What was I doing";
        const int form = static_cast<int>(rng() % 3);
        if (form == 0) {
          g.question = with_scope(stem, sc);
          g.specs = {make_spec(QueryFunction::DetectActivity, {}, sc.scope)};
        } else {
          const bool after = form == 1;
          const std::string s = context(p1);
          g.question = with_scope(stem + (after ? " after I " : " before I ") + s, sc);
          g.specs = {make_spec(after ? QueryFunction::DetectLastTime : QueryFunction::DetectFirstTime, {p1}, sc.scope),
                     make_spec(QueryFunction::DetectActivity, {},
                               after ? TimeScope::after_result(0) : TimeScope::before_result(0))};
        }
        break;
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace tsqa
