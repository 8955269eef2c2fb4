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

#include "tsqa/query.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>

#include "tsqa/error.hpp"
#include "tsqa/text.hpp"

namespace tsqa {
namespace {

constexpr std::array<std::string_view, 6> kFunctionNames = {"CalculateDuration", "DetectActivity",
                                                            "CountingFrequency", "CountingDays",
                                                            "DetectFirstTime",   "DetectLastTime"};
constexpr std::array<std::string_view, 7> kWeekdays = {"Sunday",   "Monday", "Tuesday", "Wednesday",
                                                       "Thursday", "Friday", "Saturday"};
constexpr std::array<std::string_view, 5> kTimeOfDayNames = {"any", "morning", "afternoon", "evening", "night"};

std::string_view span_name(RelativeSpan s) {
  switch (s) {
    case RelativeSpan::All: return "all";
    case RelativeSpan::Today: return "today";
    case RelativeSpan::Yesterday: return "yesterday";
    case RelativeSpan::LastWeek: return "last_week";
  }
  return "all";
}

RelativeSpan parse_span(std::string_view s) {
  for (RelativeSpan r : {RelativeSpan::All, RelativeSpan::Today, RelativeSpan::Yesterday, RelativeSpan::LastWeek}) {
    if (span_name(r) == s) return r;
  }
  throw Error(ErrorCode::kParse, "unknown relative span '" + std::string(s) + "'");
}

std::string_view kind_name(ScopeKind k) {
  switch (k) {
    case ScopeKind::AbsoluteRange: return "absolute_range";
    case ScopeKind::NamedDay: return "named_day";
    case ScopeKind::RelativeSpan: return "relative_span";
    case ScopeKind::AfterResult: return "after_result";
    case ScopeKind::BeforeResult: return "before_result";
  }
  return "relative_span";
}

ScopeKind parse_kind(std::string_view s) {
  for (ScopeKind k : {ScopeKind::AbsoluteRange, ScopeKind::NamedDay, ScopeKind::RelativeSpan, ScopeKind::AfterResult,
                      ScopeKind::BeforeResult}) {
    if (kind_name(k) == s) return k;
  }
  throw Error(ErrorCode::kParse, "unknown scope kind '" + std::string(s) + "'");
}

std::string with_space(std::string_view phrase) { return phrase.empty() ? std::string() : " " + std::string(phrase); }

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string two_digits(long v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%02ld", v);
  return buf;
}

// Appends the day-local pieces of [from, to) intersected with a day part.
void append_clipped(std::vector<Interval>& out, std::int64_t from, std::int64_t to, TimeOfDay tod,
                    const DayParts& parts) {
  for (std::int64_t day = day_start(from); day < to; day += kSecondsPerDay) {
    std::int64_t lo = std::max(from, day);
    std::int64_t hi = std::min(to, day + kSecondsPerDay);
    if (tod != TimeOfDay::Any) {
      auto [h0, h1] = parts.range(tod);
      lo = std::max(lo, day + 3600 * static_cast<std::int64_t>(h0));
      hi = std::min(hi, day + 3600 * static_cast<std::int64_t>(h1));
    }
    if (lo < hi) out.push_back({lo, hi});
  }
}

std::string scope_prefix(const nlohmann::json& v) { return with_space(v.value("scope", std::string())); }

}  // namespace

std::string_view function_name(QueryFunction f) { return kFunctionNames[static_cast<std::size_t>(f)]; }

std::optional<QueryFunction> parse_function(std::string_view name) {
  for (QueryFunction f : kAllFunctions) {
    if (function_name(f) == name) return f;
  }
  return std::nullopt;
}

std::string_view time_of_day_name(TimeOfDay t) { return kTimeOfDayNames[static_cast<std::size_t>(t)]; }

std::optional<TimeOfDay> parse_time_of_day(std::string_view name) {
  const std::string lower = text::to_lower(text::trim(name));
  for (std::size_t i = 0; i < kTimeOfDayNames.size(); ++i) {
    if (kTimeOfDayNames[i] == lower) return static_cast<TimeOfDay>(i);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// TimeScope / QuerySpec

TimeScope TimeScope::all(TimeOfDay tod) { return relative(RelativeSpan::All, tod); }

TimeScope TimeScope::relative(RelativeSpan span, TimeOfDay tod) {
  TimeScope s;
  s.kind = ScopeKind::RelativeSpan;
  s.span = span;
  s.time_of_day = tod;
  return s;
}

TimeScope TimeScope::named_day(int weekday, bool exclude_today, TimeOfDay tod) {
  TimeScope s;
  s.kind = ScopeKind::NamedDay;
  s.weekday = weekday;
  s.exclude_today = exclude_today;
  s.time_of_day = tod;
  return s;
}

TimeScope TimeScope::absolute(std::int64_t from, std::int64_t to, TimeOfDay tod) {
  TimeScope s;
  s.kind = ScopeKind::AbsoluteRange;
  s.from = from;
  s.to = to;
  s.time_of_day = tod;
  return s;
}

TimeScope TimeScope::after_result(int ref) {
  TimeScope s;
  s.kind = ScopeKind::AfterResult;
  s.result_ref = ref;
  return s;
}

TimeScope TimeScope::before_result(int ref) {
  TimeScope s = after_result(ref);
  s.kind = ScopeKind::BeforeResult;
  return s;
}

void TimeScope::validate() const {
  switch (kind) {
    case ScopeKind::AbsoluteRange:
      if (to <= from) throw Error(ErrorCode::kScope, "absolute range must have from < to");
      break;
    case ScopeKind::NamedDay:
      if (weekday < 0 || weekday > 6) throw Error(ErrorCode::kScope, "weekday must be in [0, 6]");
      break;
    case ScopeKind::AfterResult:
    case ScopeKind::BeforeResult:
      if (result_ref < 0) throw Error(ErrorCode::kScope, "result reference must be non-negative");
      break;
    case ScopeKind::RelativeSpan:
      break;
  }
}

TimeScope TimeScope::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, "scope must be a JSON object");
  TimeScope s;
  s.kind = parse_kind(j.value("kind", std::string("relative_span")));
  const std::string tod = j.value("time_of_day", std::string("any"));
  auto parsed = parse_time_of_day(tod);
  if (!parsed) throw Error(ErrorCode::kParse, "unknown time_of_day '" + tod + "'");
  s.time_of_day = *parsed;
  switch (s.kind) {
    case ScopeKind::AbsoluteRange:
      s.from = j.at("from").get<std::int64_t>();
      s.to = j.at("to").get<std::int64_t>();
      break;
    case ScopeKind::NamedDay: {
      const std::string day = j.at("weekday").get<std::string>();
      auto wd = parse_weekday(day);
      if (!wd) throw Error(ErrorCode::kParse, "unknown weekday '" + day + "'");
      s.weekday = *wd;
      s.exclude_today = j.value("exclude_today", false);
      break;
    }
    case ScopeKind::RelativeSpan:
      s.span = parse_span(j.value("span", std::string("all")));
      break;
    case ScopeKind::AfterResult:
    case ScopeKind::BeforeResult:
      s.result_ref = j.at("result_ref").get<int>();
      break;
  }
  s.validate();
  return s;
}

nlohmann::json TimeScope::to_json() const {
  nlohmann::json j = {{"kind", kind_name(kind)}, {"time_of_day", time_of_day_name(time_of_day)}};
  switch (kind) {
    case ScopeKind::AbsoluteRange:
      j["from"] = from;
      j["to"] = to;
      break;
    case ScopeKind::NamedDay:
      j["weekday"] = weekday_name(weekday);
      j["exclude_today"] = exclude_today;
      break;
    case ScopeKind::RelativeSpan:
      j["span"] = span_name(span);
      break;
    case ScopeKind::AfterResult:
    case ScopeKind::BeforeResult:
      j["result_ref"] = result_ref;
      break;
  }
  return j;
}

void QuerySpec::validate() const {
  if (contexts.empty() && function != QueryFunction::DetectActivity) {
    throw Error(ErrorCode::kPrecondition, std::string(function_name(function)) + " needs at least one context");
  }
  for (const std::string& c : contexts) {
    if (text::tokenize(c).empty()) throw Error(ErrorCode::kPrecondition, "empty context phrase");
  }
  scope.validate();
}

QuerySpec QuerySpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, "query spec must be a JSON object");
  QuerySpec s;
  const std::string fn = j.at("function").get<std::string>();
  auto f = parse_function(fn);
  if (!f) throw Error(ErrorCode::kParse, "unknown query function '" + fn + "'");
  s.function = *f;
  if (j.contains("contexts")) s.contexts = j.at("contexts").get<std::vector<std::string>>();
  if (j.contains("scope")) s.scope = TimeScope::from_json(j.at("scope"));
  s.per_day = j.value("per_day", false);
  s.validate();
  return s;
}

nlohmann::json QuerySpec::to_json() const {
  return {{"function", function_name(function)}, {"contexts", contexts}, {"scope", scope.to_json()}, {"per_day", per_day}};
}

std::vector<QuerySpec> specs_from_json(const nlohmann::json& j) {
  std::vector<QuerySpec> out;
  if (j.is_array()) {
    for (const auto& e : j) out.push_back(QuerySpec::from_json(e));
  } else {
    out.push_back(QuerySpec::from_json(j));
  }
  return out;
}

nlohmann::json specs_to_json(const std::vector<QuerySpec>& specs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const QuerySpec& s : specs) arr.push_back(s.to_json());
  return arr;
}

// ---------------------------------------------------------------------------
// Rendering

std::string render_context(const nlohmann::json& v) {
  const std::string fn = v.at("function").get<std::string>();
  const std::string sp = scope_prefix(v);
  const std::string context = v.value("context", std::string());
  auto f = parse_function(fn);
  if (!f) throw Error(ErrorCode::kParse, "unknown query function '" + fn + "'");
  switch (*f) {
    case QueryFunction::CalculateDuration: {
      const long minutes = v.at("minutes").get<long>();
      if (minutes == 0) return "You had no recorded time " + context + sp + ".";
      return "You spent " + format_duration(minutes) + " " + context + sp + ".";
    }
    case QueryFunction::DetectActivity: {
      const auto& acts = v.at("activities");
      if (acts.empty()) return "There was no confident activity detected" + sp + ".";
      std::vector<std::string> parts;
      for (const auto& a : acts) {
        parts.push_back(a.at("label").get<std::string>() + " for " + format_duration(a.at("minutes").get<long>()));
      }
      return "Detected activities" + sp + ": " + text::join(parts, ", ") + ".";
    }
    case QueryFunction::CountingFrequency:
      return "You " + context + " " + format_count(v.at("count").get<long>(), "time") + sp + ".";
    case QueryFunction::CountingDays:
      return "You were " + context + " on " + std::to_string(v.at("days").get<long>()) + " of the last " +
             std::to_string(v.at("total_days").get<long>()) + " days" + sp + ".";
    case QueryFunction::DetectFirstTime:
    case QueryFunction::DetectLastTime: {
      if (v.at("timestamp").is_null()) return capitalize(context) + " was not detected" + sp + ".";
      const char* which = *f == QueryFunction::DetectFirstTime ? "first" : "last";
      return std::string("The ") + which + " time you were " + context + sp + " was around " +
             v.at("time").get<std::string>() + ".";
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Calendar

std::int64_t day_of(std::int64_t t) {
  return t >= 0 ? t / kSecondsPerDay : -((-t + kSecondsPerDay - 1) / kSecondsPerDay);
}

std::int64_t day_start(std::int64_t t) { return day_of(t) * kSecondsPerDay; }

int weekday_of(std::int64_t t) { return static_cast<int>(((day_of(t) + 4) % 7 + 7) % 7); }

std::string_view weekday_name(int weekday) {
  if (weekday < 0 || weekday > 6) throw Error(ErrorCode::kPrecondition, "weekday out of range");
  return kWeekdays[static_cast<std::size_t>(weekday)];
}

std::optional<int> parse_weekday(std::string_view name) {
  const std::string lower = text::to_lower(text::trim(name));
  for (std::size_t i = 0; i < kWeekdays.size(); ++i) {
    if (text::to_lower(kWeekdays[i]) == lower) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::string format_clock(std::int64_t t) {
  const std::int64_t s = t - day_start(t);
  return two_digits(static_cast<long>(s / 3600)) + ":" + two_digits(static_cast<long>((s % 3600) / 60));
}

std::string format_date(std::int64_t t) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day_of(t)}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::optional<std::int64_t> parse_datetime(std::string_view s) {
  using namespace std::chrono;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  const std::string str(text::trim(s));
  char sep = 0;
  int n = std::sscanf(str.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &sep, &h, &mi, &sec);
  if (n != 3 && n != 6 && n != 7) return std::nullopt;
  if (n > 3 && sep != ' ' && sep != 'T') return std::nullopt;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 59) return std::nullopt;
  return static_cast<std::int64_t>(sys_days{ymd}.time_since_epoch().count()) * kSecondsPerDay + 3600 * h + 60 * mi +
         sec;
}

std::string format_duration(long minutes) {
  auto unit = [](long n, std::string_view word) { return std::to_string(n) + " " + std::string(word) + (n == 1 ? "" : "s"); };
  if (minutes < 60) return unit(minutes, "minute");
  const long h = minutes / 60;
  const long m = minutes % 60;
  if (m == 0) return unit(h, "hour");
  return unit(h, "hour") + " and " + unit(m, "minute");
}

std::string format_count(long n, std::string_view unit) {
  return std::to_string(n) + " " + std::string(unit) + (n == 1 ? "" : "s");
}

std::pair<int, int> DayParts::range(TimeOfDay t) const {
  if (t == TimeOfDay::Any) return {0, 24};
  return hours[static_cast<std::size_t>(t) - 1];
}

void DayParts::validate() const {
  for (const auto& [a, b] : hours) {
    if (a < 0 || b > 24 || a >= b) throw Error(ErrorCode::kConfiguration, "day part hours must satisfy 0 <= start < end <= 24");
  }
}

DayParts DayParts::from_json(const nlohmann::json& j) {
  DayParts p;
  for (std::size_t i = 1; i < kTimeOfDayNames.size(); ++i) {
    const std::string key(kTimeOfDayNames[i]);
    if (j.contains(key)) {
      const auto& r = j.at(key);
      p.hours[i - 1] = {r.at(0).get<int>(), r.at(1).get<int>()};
    }
  }
  p.validate();
  return p;
}

nlohmann::json DayParts::to_json() const {
  nlohmann::json j;
  for (std::size_t i = 1; i < kTimeOfDayNames.size(); ++i) {
    j[std::string(kTimeOfDayNames[i])] = {hours[i - 1].first, hours[i - 1].second};
  }
  return j;
}

std::vector<Interval> resolve_scope(const TimeScope& scope, std::int64_t now, const std::optional<Interval>& data_bounds,
                                    const DayParts& parts, const PriorResults& prior) {
  scope.validate();
  std::vector<Interval> out;
  const std::int64_t today = day_start(now);
  auto add_days = [&](std::int64_t first_day, int count) {
    append_clipped(out, first_day, first_day + count * kSecondsPerDay, scope.time_of_day, parts);
  };
  switch (scope.kind) {
    case ScopeKind::AbsoluteRange:
      append_clipped(out, scope.from, scope.to, scope.time_of_day, parts);
      break;
    case ScopeKind::NamedDay: {
      int delta = (weekday_of(now) - scope.weekday + 7) % 7;
      if (delta == 0 && scope.exclude_today) delta = 7;
      add_days(today - delta * kSecondsPerDay, 1);
      break;
    }
    case ScopeKind::RelativeSpan:
      switch (scope.span) {
        case RelativeSpan::Today:
          add_days(today, 1);
          break;
        case RelativeSpan::Yesterday:
          add_days(today - kSecondsPerDay, 1);
          break;
        case RelativeSpan::LastWeek: {
          const std::int64_t monday = today - ((weekday_of(now) + 6) % 7) * kSecondsPerDay;
          add_days(monday - 7 * kSecondsPerDay, 7);
          break;
        }
        case RelativeSpan::All:
          if (data_bounds) {
            const std::int64_t first = day_start(data_bounds->from);
            const std::int64_t last = day_start(data_bounds->to - 1);
            add_days(first, static_cast<int>((last - first) / kSecondsPerDay + 1));
          }
          break;
      }
      break;
    case ScopeKind::AfterResult:
    case ScopeKind::BeforeResult: {
      const std::size_t ref = static_cast<std::size_t>(scope.result_ref);
      if (ref >= prior.size() || !prior[ref]) {
        throw Error(ErrorCode::kScope, "scope refers to step " + std::to_string(scope.result_ref + 1) +
                                           ", which produced no timestamp");
      }
      const std::int64_t t = *prior[ref];
      if (scope.kind == ScopeKind::AfterResult) {
        append_clipped(out, t + 1, day_start(t) + kSecondsPerDay, scope.time_of_day, parts);
      } else {
        append_clipped(out, day_start(t), t, scope.time_of_day, parts);
      }
      break;
    }
  }
  return out;
}

std::vector<std::vector<Interval>> group_by_day(const std::vector<Interval>& intervals) {
  std::vector<std::vector<Interval>> out;
  for (const Interval& iv : intervals) {
    if (out.empty() || day_of(out.back().front().from) != day_of(iv.from)) out.emplace_back();
    out.back().push_back(iv);
  }
  return out;
}

namespace {

std::string time_of_day_phrase(TimeOfDay t) {
  switch (t) {
    case TimeOfDay::Any: return "";
    case TimeOfDay::Morning: return "in the morning";
    case TimeOfDay::Afternoon: return "in the afternoon";
    case TimeOfDay::Evening: return "in the evening";
    case TimeOfDay::Night: return "at night";
  }
  return "";
}

std::string join_phrases(std::string a, const std::string& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  return a + " " + b;
}

}  // namespace

std::string describe_scope(const TimeScope& scope) {
  std::string base;
  switch (scope.kind) {
    case ScopeKind::AbsoluteRange:
      base = "between " + format_date(scope.from) + " " + format_clock(scope.from) + " and " + format_date(scope.to) +
             " " + format_clock(scope.to);
      break;
    case ScopeKind::NamedDay:
      base = std::string(scope.exclude_today ? "last " : "on ") + std::string(weekday_name(scope.weekday));
      break;
    case ScopeKind::RelativeSpan:
      switch (scope.span) {
        case RelativeSpan::All: break;
        case RelativeSpan::Today: base = "today"; break;
        case RelativeSpan::Yesterday: base = "yesterday"; break;
        case RelativeSpan::LastWeek: base = "last week"; break;
      }
      break;
    case ScopeKind::AfterResult: base = "after that"; break;
    case ScopeKind::BeforeResult: base = "before that"; break;
  }
  return join_phrases(base, time_of_day_phrase(scope.time_of_day));
}

// ---------------------------------------------------------------------------
// Scorers

void ModelScorer::score(std::string_view phrase, std::span<const std::size_t> records, std::span<double> out) const {
  const ScoringIndex::PreparedLabel label = index_.prepare(encode_label(params_, phrase));
  for (std::size_t i = 0; i < records.size(); ++i) out[i] = index_.score(records[i], label);
}

void OracleScorer::score(std::string_view phrase, std::span<const std::size_t> records, std::span<double> out) const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    out[i] = timeline_.windows[records[i]].has_label(phrase) ? 0.99 : 0.01;
  }
}

void TableScorer::score(std::string_view phrase, std::span<const std::size_t> records, std::span<double> out) const {
  auto idx = vocab_.index_of(phrase);
  if (!idx) throw Error(ErrorCode::kOutOfVocabulary, "phrase '" + std::string(phrase) + "' is not in the vocabulary");
  const std::vector<double>& row = table_.at(static_cast<std::size_t>(*idx));
  for (std::size_t i = 0; i < records.size(); ++i) out[i] = row.at(records[i]);
}

// ---------------------------------------------------------------------------
// Query functions

void QueryOptions::validate() const {
  check_threshold(threshold);
  if (top_k <= 0) throw Error(ErrorCode::kConfiguration, "top_k must be positive");
  if (gap_minutes < 0) throw Error(ErrorCode::kConfiguration, "gap_minutes must be non-negative");
  day_parts.validate();
}

std::vector<std::size_t> matched_records(const QueryEnv& env, std::string_view phrase,
                                         const std::vector<Interval>& intervals) {
  if (env.index == nullptr || env.scorer == nullptr) throw Error(ErrorCode::kPrecondition, "query environment incomplete");
  check_threshold(env.options.threshold);
  std::vector<std::size_t> records = env.index->select(intervals, env.user_id);
  std::vector<double> scores(records.size());
  env.scorer->score(phrase, records, scores);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (scores[i] > env.options.threshold) out.push_back(records[i]);
  }
  std::stable_sort(out.begin(), out.end(),
                   [&](std::size_t a, std::size_t b) { return env.index->timestamp(a) < env.index->timestamp(b); });
  return out;
}

SensorContext calculate_duration(const QueryEnv& env, std::string_view context, const std::vector<Interval>& intervals,
                                 std::string_view scope_phrase) {
  nlohmann::json v = {{"function", "CalculateDuration"},
                      {"context", context},
                      {"scope", scope_phrase},
                      {"minutes", matched_records(env, context, intervals).size()}};
  return {render_context(v), v};
}

SensorContext detect_activity(const QueryEnv& env, const std::vector<Interval>& intervals,
                              std::string_view scope_phrase, const std::vector<std::string>& candidates) {
  std::vector<std::string> labels = candidates;
  if (labels.empty()) {
    if (env.vocab == nullptr) throw Error(ErrorCode::kPrecondition, "activity detection needs a vocabulary");
    labels = env.vocab->phrases();
  }
  std::vector<std::pair<long, std::size_t>> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const long n = static_cast<long>(matched_records(env, labels[i], intervals).size());
    if (n > 0) counts.emplace_back(n, i);
  }
  // ties by label so the order does not depend on how the vocabulary was built
  std::sort(counts.begin(), counts.end(), [&](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : labels[a.second] < labels[b.second];
  });
  if (counts.size() > static_cast<std::size_t>(env.options.top_k)) counts.resize(static_cast<std::size_t>(env.options.top_k));
  nlohmann::json acts = nlohmann::json::array();
  for (const auto& [n, i] : counts) acts.push_back({{"label", labels[i]}, {"minutes", n}});
  nlohmann::json v = {{"function", "DetectActivity"}, {"scope", scope_phrase}, {"activities", acts}};
  return {render_context(v), v};
}

long count_episodes(std::span<const std::int64_t> timestamps, std::int64_t gap_seconds) {
  long n = 0;
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    if (i == 0 || timestamps[i] - timestamps[i - 1] > gap_seconds) ++n;
  }
  return n;
}

SensorContext counting_frequency(const QueryEnv& env, std::string_view context, const std::vector<Interval>& intervals,
                                 std::string_view scope_phrase) {
  long episodes = 0;
  long minutes = 0;
  std::vector<std::int64_t> ts;
  for (const Interval& iv : intervals) {
    ts.clear();
    for (std::size_t r : matched_records(env, context, {iv})) ts.push_back(env.index->timestamp(r));
    episodes += count_episodes(ts, 60 * static_cast<std::int64_t>(env.options.gap_minutes));
    minutes += static_cast<long>(ts.size());
  }
  nlohmann::json v = {{"function", "CountingFrequency"},
                      {"context", context},
                      {"scope", scope_phrase},
                      {"count", episodes},
                      {"minutes", minutes}};
  return {render_context(v), v};
}

SensorContext counting_days(const QueryEnv& env, std::string_view context,
                            const std::vector<std::vector<Interval>>& intervals_by_day, std::string_view scope_phrase) {
  long days = 0;
  for (const auto& day : intervals_by_day) {
    if (!matched_records(env, context, day).empty()) ++days;
  }
  nlohmann::json v = {{"function", "CountingDays"},
                      {"context", context},
                      {"scope", scope_phrase},
                      {"days", days},
                      {"total_days", intervals_by_day.size()}};
  return {render_context(v), v};
}

namespace {

SensorContext detect_time(const QueryEnv& env, std::string_view context, const std::vector<Interval>& intervals,
                          std::string_view scope_phrase, bool first) {
  const std::vector<std::size_t> m = matched_records(env, context, intervals);
  nlohmann::json v = {{"function", first ? "DetectFirstTime" : "DetectLastTime"},
                      {"context", context},
                      {"scope", scope_phrase},
                      {"timestamp", nullptr}};
  if (!m.empty()) {
    const std::int64_t t = env.index->timestamp(first ? m.front() : m.back());
    v["timestamp"] = t;
    v["time"] = format_clock(t);
    v["date"] = format_date(t);
  }
  return {render_context(v), v};
}

}  // namespace

SensorContext detect_first_time(const QueryEnv& env, std::string_view context, const std::vector<Interval>& intervals,
                                std::string_view scope_phrase) {
  return detect_time(env, context, intervals, scope_phrase, true);
}

SensorContext detect_last_time(const QueryEnv& env, std::string_view context, const std::vector<Interval>& intervals,
                               std::string_view scope_phrase) {
  return detect_time(env, context, intervals, scope_phrase, false);
}

namespace {

SensorContext run_one(const QueryEnv& env, const QuerySpec& spec, std::string_view context,
                      const std::vector<Interval>& intervals, const std::string& phrase) {
  switch (spec.function) {
    case QueryFunction::CalculateDuration: return calculate_duration(env, context, intervals, phrase);
    case QueryFunction::DetectActivity: return detect_activity(env, intervals, phrase, spec.contexts);
    case QueryFunction::CountingFrequency: return counting_frequency(env, context, intervals, phrase);
    case QueryFunction::CountingDays: return counting_days(env, context, group_by_day(intervals), phrase);
    case QueryFunction::DetectFirstTime: return detect_first_time(env, context, intervals, phrase);
    case QueryFunction::DetectLastTime: return detect_last_time(env, context, intervals, phrase);
  }
  throw Error(ErrorCode::kPrecondition, "unknown query function");
}

}  // namespace

std::vector<SensorContext> execute(const std::vector<QuerySpec>& specs, const QueryEnv& env) {
  if (env.index == nullptr) throw Error(ErrorCode::kPrecondition, "query environment has no window index");
  env.options.validate();
  const std::optional<Interval> bounds = env.index->bounds(env.user_id);
  PriorResults prior;
  std::vector<SensorContext> out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const QuerySpec& spec = specs[i];
    spec.validate();
    if (spec.scope.result_ref >= static_cast<int>(i)) {
      throw Error(ErrorCode::kScope, "scope of step " + std::to_string(i + 1) + " refers to a later step");
    }
    const std::vector<Interval> intervals = resolve_scope(spec.scope, env.now, bounds, env.options.day_parts, prior);
    const std::string phrase = describe_scope(spec.scope);

    // DetectActivity treats its contexts as one candidate set.
    std::vector<std::string> targets = spec.contexts;
    if (spec.function == QueryFunction::DetectActivity || targets.empty()) targets = {std::string()};

    std::optional<std::int64_t> bound;
    for (const std::string& context : targets) {
      if (!spec.per_day) {
        out.push_back(run_one(env, spec, context, intervals, phrase));
      } else {
        TimeScope day_scope = spec.scope;
        for (const auto& day : group_by_day(intervals)) {
          day_scope.kind = ScopeKind::NamedDay;
          day_scope.weekday = weekday_of(day.front().from);
          day_scope.exclude_today = false;
          SensorContext c = run_one(env, spec, context, day, describe_scope(day_scope));
          c.values["day"] = weekday_name(day_scope.weekday);
          c.values["date"] = format_date(day.front().from);
          out.push_back(std::move(c));
        }
      }
      if (!bound && !out.empty() && out.back().values.contains("timestamp") && !out.back().values["timestamp"].is_null()) {
        bound = out.back().values["timestamp"].get<std::int64_t>();
      }
    }
    prior.push_back(bound);
  }
  return out;
}

}  // namespace tsqa
