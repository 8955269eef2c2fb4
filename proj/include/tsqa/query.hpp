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

#ifndef TSQA_QUERY_HPP_
#define TSQA_QUERY_HPP_

// Query functions over matched windows. Each produces a SensorContext: a
// structured payload and the sentence rendered from it.
//
// Calendar arithmetic is done in UTC; a day runs [00:00, 24:00). One matched
// window counts as one minute.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsqa/encoders.hpp"
#include "tsqa/store.hpp"
#include "tsqa/timeline.hpp"
#include "tsqa/window_index.hpp"

namespace tsqa {

enum class QueryFunction {
  CalculateDuration,
  DetectActivity,
  CountingFrequency,
  CountingDays,
  DetectFirstTime,
  DetectLastTime,
};

inline constexpr std::array<QueryFunction, 6> kAllFunctions = {
    QueryFunction::CalculateDuration, QueryFunction::DetectActivity,  QueryFunction::CountingFrequency,
    QueryFunction::CountingDays,      QueryFunction::DetectFirstTime, QueryFunction::DetectLastTime};

std::string_view function_name(QueryFunction f);
std::optional<QueryFunction> parse_function(std::string_view name);

enum class TimeOfDay { Any, Morning, Afternoon, Evening, Night };
std::string_view time_of_day_name(TimeOfDay t);
std::optional<TimeOfDay> parse_time_of_day(std::string_view name);

enum class ScopeKind { AbsoluteRange, NamedDay, RelativeSpan, AfterResult, BeforeResult };
enum class RelativeSpan { All, Today, Yesterday, LastWeek };

struct TimeScope {
  ScopeKind kind = ScopeKind::RelativeSpan;
  std::int64_t from = 0;  // AbsoluteRange
  std::int64_t to = 0;
  int weekday = -1;            // NamedDay, 0 = Sunday
  bool exclude_today = false;  // NamedDay: "last <weekday>" skips today
  RelativeSpan span = RelativeSpan::All;
  TimeOfDay time_of_day = TimeOfDay::Any;
  int result_ref = -1;  // AfterResult / BeforeResult: index of an earlier spec

  static TimeScope all(TimeOfDay tod = TimeOfDay::Any);
  static TimeScope relative(RelativeSpan span, TimeOfDay tod = TimeOfDay::Any);
  static TimeScope named_day(int weekday, bool exclude_today, TimeOfDay tod = TimeOfDay::Any);
  static TimeScope absolute(std::int64_t from, std::int64_t to, TimeOfDay tod = TimeOfDay::Any);
  static TimeScope after_result(int ref);
  static TimeScope before_result(int ref);

  void validate() const;
  static TimeScope from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  bool operator==(const TimeScope&) const = default;
};

struct QuerySpec {
  QueryFunction function = QueryFunction::CalculateDuration;
  std::vector<std::string> contexts;
  TimeScope scope;
  bool per_day = false;

  void validate() const;
  static QuerySpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  bool operator==(const QuerySpec&) const = default;
};

std::vector<QuerySpec> specs_from_json(const nlohmann::json& j);
nlohmann::json specs_to_json(const std::vector<QuerySpec>& specs);

struct SensorContext {
  std::string text;
  nlohmann::json values;

  bool operator==(const SensorContext&) const = default;
};

// Text for a payload; SensorContext::text is always render_context(values).
std::string render_context(const nlohmann::json& values);

// ---------------------------------------------------------------------------
// Calendar helpers

inline constexpr std::int64_t kSecondsPerDay = 86400;

std::int64_t day_of(std::int64_t t);         // days since 1970-01-01
std::int64_t day_start(std::int64_t t);      // midnight at or before t
int weekday_of(std::int64_t t);              // 0 = Sunday
std::string_view weekday_name(int weekday);  // "Sunday".."Saturday"
std::optional<int> parse_weekday(std::string_view name);
std::string format_clock(std::int64_t t);  // "HH:MM"
std::string format_date(std::int64_t t);   // "YYYY-MM-DD"
std::optional<std::int64_t> parse_datetime(std::string_view s);  // "YYYY-MM-DD[ HH:MM[:SS]]"

// "H hours and M minutes", "H hours", "M minutes", with singular forms.
std::string format_duration(long minutes);
// "1 time", "3 days"
std::string format_count(long n, std::string_view unit);

// Hour ranges of the named day parts. Ranges may not wrap midnight.
struct DayParts {
  std::array<std::pair<int, int>, 4> hours = {{{6, 12}, {12, 18}, {18, 24}, {0, 6}}};  // morning..night

  std::pair<int, int> range(TimeOfDay t) const;
  void validate() const;
  static DayParts from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Timestamps bound by earlier specs, indexed like the spec list.
using PriorResults = std::vector<std::optional<std::int64_t>>;

// Resolves a scope into sorted, disjoint intervals that each lie inside one
// day. `data_bounds` defines the "all" span.
std::vector<Interval> resolve_scope(const TimeScope& scope, std::int64_t now, const std::optional<Interval>& data_bounds,
                                    const DayParts& parts = {}, const PriorResults& prior = {});

// Groups day-local intervals by day, in order.
std::vector<std::vector<Interval>> group_by_day(const std::vector<Interval>& intervals);

// Short phrase for a scope, e.g. "last week in the morning"; empty for all time.
std::string describe_scope(const TimeScope& scope);

// ---------------------------------------------------------------------------
// Scoring

// Scores windows of a WindowIndex against a label phrase.
class WindowScorer {
 public:
  virtual ~WindowScorer() = default;
  virtual void score(std::string_view phrase, std::span<const std::size_t> records, std::span<double> out) const = 0;
};

// Learned path: label encoder plus similarity model over a store.
class ModelScorer : public WindowScorer {
 public:
  ModelScorer(const ScoringIndex& index, const Parameters& params) : index_(index), params_(params) {}
  void score(std::string_view phrase, std::span<const std::size_t> records, std::span<double> out) const override;

 private:
  const ScoringIndex& index_;
  const Parameters& params_;
};

// Ground-truth labels as scores: 0.99 when the window carries the phrase,
// else 0.01. Record i is timeline window i.
class OracleScorer : public WindowScorer {
 public:
  explicit OracleScorer(const Timeline& timeline) : timeline_(timeline) {}
  void score(std::string_view phrase, std::span<const std::size_t> records, std::span<double> out) const override;

 private:
  const Timeline& timeline_;
};

// Explicit score table per phrase (phrase i of the vocabulary, record j).
class TableScorer : public WindowScorer {
 public:
  TableScorer(const LabelVocabulary& vocab, std::vector<std::vector<double>> table)
      : vocab_(vocab), table_(std::move(table)) {}
  void score(std::string_view phrase, std::span<const std::size_t> records, std::span<double> out) const override;

 private:
  const LabelVocabulary& vocab_;
  std::vector<std::vector<double>> table_;
};

struct QueryOptions {
  double threshold = 0.5;
  int top_k = 3;
  int gap_minutes = 5;
  DayParts day_parts;

  void validate() const;
};

struct QueryEnv {
  const WindowIndex* index = nullptr;
  const WindowScorer* scorer = nullptr;
  const LabelVocabulary* vocab = nullptr;
  std::optional<std::string> user_id;
  std::int64_t now = 0;
  QueryOptions options;
};

// Records inside the intervals whose score exceeds the threshold, in time order.
std::vector<std::size_t> matched_records(const QueryEnv& env, std::string_view phrase,
                                         const std::vector<Interval>& intervals);

SensorContext calculate_duration(const QueryEnv& env, std::string_view context, const std::vector<Interval>& intervals,
                                 std::string_view scope_phrase);
// Candidates default to the whole vocabulary.
SensorContext detect_activity(const QueryEnv& env, const std::vector<Interval>& intervals,
                              std::string_view scope_phrase, const std::vector<std::string>& candidates = {});
SensorContext counting_frequency(const QueryEnv& env, std::string_view context, const std::vector<Interval>& intervals,
                                 std::string_view scope_phrase);
SensorContext counting_days(const QueryEnv& env, std::string_view context,
                            const std::vector<std::vector<Interval>>& intervals_by_day, std::string_view scope_phrase);
SensorContext detect_first_time(const QueryEnv& env, std::string_view context, const std::vector<Interval>& intervals,
                                std::string_view scope_phrase);
SensorContext detect_last_time(const QueryEnv& env, std::string_view context, const std::vector<Interval>& intervals,
                               std::string_view scope_phrase);

// Number of runs in sorted timestamps where neighbours at most `gap_seconds`
// apart join the same run.
long count_episodes(std::span<const std::int64_t> timestamps, std::int64_t gap_seconds);

// Executes specs in order. Each spec yields one context per phrase (per day
// when per_day is set), contexts first then days.
std::vector<SensorContext> execute(const std::vector<QuerySpec>& specs, const QueryEnv& env);

}  // namespace tsqa

#endif  // TSQA_QUERY_HPP_
