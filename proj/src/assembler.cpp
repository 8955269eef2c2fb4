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

#include "tsqa/assembler.hpp"

#include <regex>

#include "tsqa/error.hpp"
#include "tsqa/text.hpp"

namespace tsqa {
namespace {

std::string with_space(const nlohmann::json& v) {
  const std::string s = v.value("scope", "");
  return s.empty() ? s : " " + s;
}

std::string fn(const SensorContext& c) { return c.values.value("function", ""); }

const SensorContext& expect(const std::vector<SensorContext>& contexts, std::size_t i, std::string_view function,
                            QuestionCategory category) {
  if (i >= contexts.size()) {
    throw Error(ErrorCode::kAssembly, std::string(category_name(category)) + " answer is missing query results");
  }
  if (fn(contexts[i]) != function) {
    throw Error(ErrorCode::kAssembly, std::string(category_name(category)) + " answer cannot use a " +
                                          fn(contexts[i]) + " result");
  }
  return contexts[i];
}

long minutes_of(const SensorContext& c) { return c.values.at("minutes").get<long>(); }

struct Answer {
  std::string full;
  std::string brief;
};

Answer time_compare(const std::vector<SensorContext>& contexts) {
  constexpr auto kCat = QuestionCategory::TimeCompare;
  if (contexts.size() != 2) throw Error(ErrorCode::kAssembly, "a time comparison needs exactly two results");
  const SensorContext& a = expect(contexts, 0, "CalculateDuration", kCat);
  const SensorContext& b = expect(contexts, 1, "CalculateDuration", kCat);
  const std::string ca = a.values.at("context");
  const std::string cb = b.values.at("context");
  const long ma = minutes_of(a);
  const long mb = minutes_of(b);
  const std::string sp = with_space(a.values);
  if (ma == mb) {
    return {"You spent the same time " + ca + " and " + cb + sp + ", " + format_duration(ma) + " each.", ca};
  }
  const bool first = ma > mb;
  const std::string& w = first ? ca : cb;
  const std::string& l = first ? cb : ca;
  return {"You spent more time " + w + " (" + format_duration(first ? ma : mb) + ") than " + l + " (" +
              format_duration(first ? mb : ma) + ")" + sp + ".",
          w};
}

Answer day_query(const std::vector<SensorContext>& contexts) {
  if (contexts.empty()) return {"No data.", "No data"};
  std::size_t best = 0;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const SensorContext& c = expect(contexts, i, "CalculateDuration", QuestionCategory::DayQuery);
    if (!c.values.contains("day")) throw Error(ErrorCode::kAssembly, "day question results lack per-day entries");
    if (minutes_of(c) > minutes_of(contexts[best])) best = i;
  }
  const SensorContext& c = contexts[best];
  const std::string day = c.values.at("day");
  return {"You spent the most time " + c.values.at("context").get<std::string>() + " on " + day + " (" +
              format_duration(minutes_of(c)) + ").",
          day};
}

Answer time_query(const std::vector<SensorContext>& contexts) {
  if (contexts.empty()) throw Error(ErrorCode::kAssembly, "TimeQuery answer is missing query results");
  const SensorContext& c = contexts.front();
  const std::string ctx = c.values.at("context");
  const std::string sp = with_space(c.values);
  const std::string f = fn(c);
  if (f == "CalculateDuration") {
    const std::string d = format_duration(minutes_of(c));
    return {"You spent " + d + " " + ctx + sp + ".", d};
  }
  if (f != "DetectFirstTime" && f != "DetectLastTime") {
    throw Error(ErrorCode::kAssembly, "TimeQuery answer cannot use a " + f + " result");
  }
  if (c.values.at("timestamp").is_null()) {
    std::string cap = ctx;
    if (!cap.empty()) cap[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(cap[0])));
    return {cap + " was not detected" + sp + ".", "Not detected"};
  }
  const std::string clock = c.values.at("time");
  return {std::string("The ") + (f == "DetectFirstTime" ? "first" : "last") + " time you were " + ctx + sp +
              " was at " + clock + " on " + c.values.at("date").get<std::string>() + ".",
          clock};
}

Answer counting(const std::vector<SensorContext>& contexts) {
  if (contexts.empty()) throw Error(ErrorCode::kAssembly, "Counting answer is missing query results");
  const SensorContext& c = contexts.front();
  const std::string ctx = c.values.at("context");
  const std::string sp = with_space(c.values);
  if (fn(c) == "CountingFrequency") {
    const std::string n = format_count(c.values.at("count").get<long>(), "time");
    return {"You were " + ctx + " " + n + sp + ".", n};
  }
  expect(contexts, 0, "CountingDays", QuestionCategory::Counting);
  const std::string n = format_count(c.values.at("days").get<long>(), "day");
  return {"You were " + ctx + " on " + n + sp + ", out of " + std::to_string(c.values.at("total_days").get<long>()) +
              " with data.",
          n};
}

Answer existence(const std::vector<SensorContext>& contexts) {
  const SensorContext& c = expect(contexts, 0, "CalculateDuration", QuestionCategory::Existence);
  const std::string ctx = c.values.at("context");
  const std::string sp = with_space(c.values);
  const long m = minutes_of(c);
  if (m > 0) return {"Yes, you were " + ctx + " for " + format_duration(m) + sp + ".", "Yes"};
  return {"No, you were not " + ctx + sp + ".", "No"};
}

Answer action_query(const std::vector<SensorContext>& contexts) {
  const SensorContext* act = nullptr;
  for (const SensorContext& c : contexts) {
    if (fn(c) == "DetectActivity") act = &c;
  }
  if (act == nullptr) throw Error(ErrorCode::kAssembly, "ActionQuery answer needs an activity detection result");
  const auto& acts = act->values.at("activities");
  const std::string sp = with_space(act->values);
  if (acts.empty()) return {"No activity detected" + sp + ".", "No activity detected"};
  auto item = [](const nlohmann::json& a) {
    return a.at("label").get<std::string>() + " (" + format_duration(a.at("minutes").get<long>()) + ")";
  };
  std::string full = "Your main activity" + sp + " was " + item(acts[0]);
  if (acts.size() > 1) {
    std::vector<std::string> rest;
    for (std::size_t i = 1; i < acts.size(); ++i) rest.push_back(item(acts[i]));
    full += ", followed by " + text::join(rest, ", ");
  }
  return {full + ".", acts[0].at("label").get<std::string>()};
}

std::optional<std::string> search(const std::string& s, const std::regex& re) {
  std::smatch m;
  if (!std::regex_search(s, m, re)) return std::nullopt;
  return m.str(0);
}

}  // namespace

void GenConfig::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) throw Error(ErrorCode::kConfiguration, "temperature must be in [0, 2]");
  if (max_tokens <= 0) throw Error(ErrorCode::kConfiguration, "max_tokens must be positive");
}

nlohmann::json AnswerBundle::to_json() const {
  nlohmann::json ctx = nlohmann::json::array();
  for (const SensorContext& c : contexts_used) ctx.push_back({{"text", c.text}, {"values", c.values}});
  nlohmann::json j = {{"full_answer", full_answer},
                      {"short_answer", short_answer},
                      {"source", source == AnswerSource::Templates ? "templates" : "llm"},
                      {"contexts", ctx}};
  if (error) j["error"] = *error;
  return j;
}

std::string build_answer_prompt(const std::vector<SensorContext>& contexts, std::string_view question) {
  if (contexts.empty()) throw Error(ErrorCode::kPrecondition, "answer prompt needs at least one context");
  std::vector<std::string> parts;
  for (const SensorContext& c : contexts) parts.push_back(c.text);
  return "Answer the question based on the context below. Context: " + text::join(parts, " ") +
         " Question: " + std::string(question) + " Response:";
}

AnswerBundle assemble_template(QuestionCategory category, const std::vector<QuerySpec>& specs,
                               const std::vector<SensorContext>& contexts, std::string_view question,
                               const LabelVocabulary& vocab) {
  (void)specs;
  (void)question;
  (void)vocab;
  Answer a;
  switch (category) {
    case QuestionCategory::TimeCompare: a = time_compare(contexts); break;
    case QuestionCategory::DayQuery: a = day_query(contexts); break;
    case QuestionCategory::TimeQuery: a = time_query(contexts); break;
    case QuestionCategory::Counting: a = counting(contexts); break;
    case QuestionCategory::Existence: a = existence(contexts); break;
    case QuestionCategory::ActionQuery: a = action_query(contexts); break;
  }
  AnswerBundle b;
  b.full_answer = std::move(a.full);
  b.short_answer = std::move(a.brief);
  b.contexts_used = contexts;
  b.source = AnswerSource::Templates;
  return b;
}

AnswerBundle assemble_llm(ChatClient& client, QuestionCategory category, const std::vector<QuerySpec>& specs,
                          const std::vector<SensorContext>& contexts, std::string_view question,
                          const LabelVocabulary& vocab, const GenConfig& gen) {
  gen.validate();
  try {
    const std::string prompt = build_answer_prompt(contexts, question);
    std::string full = client.complete({{ChatRole::User, prompt}}, gen.temperature, gen.max_tokens);
    if (text::trim(full).empty()) throw Error(ErrorCode::kProtocol, "model returned an empty answer");
    AnswerBundle b;
    b.short_answer = extract_short_answer(full, category, vocab);
    b.full_answer = std::string(text::trim(full));
    b.contexts_used = contexts;
    b.source = AnswerSource::Llm;
    return b;
  } catch (const Error& e) {
    AnswerBundle b = assemble_template(category, specs, contexts, question, vocab);
    b.error = e.what();
    return b;
  }
}

std::string extract_short_answer(std::string_view full, QuestionCategory category, const LabelVocabulary& vocab) {
  static const std::regex kWeekday("\\b(sunday|monday|tuesday|wednesday|thursday|friday|saturday)\\b",
                                   std::regex::icase);
  static const std::regex kClock("\\b\\d{1,2}:\\d{2}\\b");
  static const std::regex kDuration(
      "\\b\\d+ hours? and \\d+ minutes?\\b|\\b\\d+ (hours?|minutes?)\\b|\\bnot detected\\b", std::regex::icase);
  static const std::regex kYesNo("\\b(yes|no)\\b", std::regex::icase);
  static const std::regex kCount("\\b\\d+ (times?|days?)\\b", std::regex::icase);
  const std::string s(full);
  std::optional<std::string> hit;
  switch (category) {
    case QuestionCategory::DayQuery:
      hit = search(s, kWeekday);
      if (hit) {
        std::string d = text::to_lower(*hit);
        d[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(d[0])));
        hit = d;
      }
      break;
    case QuestionCategory::TimeQuery:
      hit = search(s, kClock);
      if (!hit) hit = search(s, kDuration);
      if (hit && text::to_lower(*hit) == "not detected") hit = "Not detected";
      break;
    case QuestionCategory::Existence:
      hit = search(s, kYesNo);
      if (hit) hit = text::to_lower(*hit) == "yes" ? "Yes" : "No";
      break;
    case QuestionCategory::Counting: hit = search(s, kCount); break;
    case QuestionCategory::TimeCompare:
    case QuestionCategory::ActionQuery: {
      const std::vector<std::string> tokens = text::tokenize(s);
      std::size_t best_pos = tokens.size();
      std::size_t best_len = 0;
      for (const std::string& p : vocab.phrases()) {
        const std::vector<std::string> needle = text::tokenize(p);
        if (needle.empty() || needle.size() > tokens.size()) continue;
        for (std::size_t i = 0; i + needle.size() <= tokens.size(); ++i) {
          if (!std::equal(needle.begin(), needle.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) continue;
          if (i < best_pos || (i == best_pos && needle.size() > best_len)) {
            best_pos = i;
            best_len = needle.size();
            hit = p;
          }
          break;
        }
      }
      break;
    }
  }
  if (hit) return *hit;
  std::vector<std::string> tokens = text::tokenize(s);
  if (tokens.size() > 3) tokens.resize(3);
  return text::join(tokens, " ");
}

}  // namespace tsqa
