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

#include <random>

#include "doctest.h"
#include "query_oracle.hpp"
#include "tsqa/error.hpp"
#include "tsqa/synth.hpp"

namespace tsqa {
namespace {

// Wed 2015-09-30 12:00 UTC
constexpr std::int64_t kWedNoon = 1443614400;
constexpr std::int64_t kTue = 1443484800;  // Tue 2015-09-29 00:00

// One user, one window per listed minute offset from `base`, each labelled.
Timeline minute_timeline(std::int64_t base, const std::vector<int>& minutes, const std::vector<std::string>& labels) {
  Timeline t;
  for (int m : minutes) {
    SensorWindow w;
    w.user_id = "u";
    w.timestamp = base + 60LL * m;
    w.labels = labels;
    t.windows.push_back(w);
  }
  return t;
}

struct Fixture {
  Timeline timeline;
  WindowIndex index;
  LabelVocabulary vocab;
  OracleScorer scorer;
  QueryEnv env;

  Fixture(Timeline t, std::vector<std::string> phrases, std::int64_t now)
      : timeline(std::move(t)), index(WindowIndex::from_timeline(timeline)), vocab(std::move(phrases)), scorer(timeline) {
    env.index = &index;
    env.scorer = &scorer;
    env.vocab = &vocab;
    env.user_id = "u";
    env.now = now;
  }
};

TEST_CASE("calendar helpers") {
  CHECK(weekday_of(kWedNoon) == 3);
  CHECK(weekday_name(weekday_of(kTue)) == "Tuesday");
  CHECK(format_date(kWedNoon) == "2015-09-30");
  CHECK(format_clock(kWedNoon + 7 * 60) == "12:07");
  CHECK(parse_datetime("2015-09-30 12:00") == kWedNoon);
  CHECK(parse_datetime("2015-09-30T12:00:00") == kWedNoon);
  CHECK(parse_datetime("2015-09-30") == kWedNoon - 12 * 3600);
  CHECK_FALSE(parse_datetime("2015-02-30"));
  CHECK(format_duration(0) == "0 minutes");
  CHECK(format_duration(1) == "1 minute");
  CHECK(format_duration(35) == "35 minutes");
  CHECK(format_duration(60) == "1 hour");
  CHECK(format_duration(61) == "1 hour and 1 minute");
  CHECK(format_duration(135) == "2 hours and 15 minutes");
  CHECK(format_count(1, "time") == "1 time");
  CHECK(format_count(3, "day") == "3 days");
}

TEST_CASE("scope resolution") {
  const auto tue = resolve_scope(TimeScope::named_day(2, false), kWedNoon, std::nullopt);
  REQUIRE(tue.size() == 1);
  CHECK(tue[0] == Interval{kTue, kTue + 86400});

  // "on Wednesday" on a Wednesday is today; "last Wednesday" is a week back.
  CHECK(resolve_scope(TimeScope::named_day(3, false), kWedNoon, std::nullopt)[0].from == kTue + 86400);
  CHECK(resolve_scope(TimeScope::named_day(3, true), kWedNoon, std::nullopt)[0].from == kTue + 86400 - 7 * 86400);

  const auto week = resolve_scope(TimeScope::relative(RelativeSpan::LastWeek, TimeOfDay::Morning), kWedNoon, std::nullopt);
  REQUIRE(week.size() == 7);
  const std::int64_t mon = 1442793600;  // Mon 2015-09-21
  for (int d = 0; d < 7; ++d) {
    CHECK(week[static_cast<std::size_t>(d)].from == mon + 86400LL * d + 6 * 3600);
    CHECK(week[static_cast<std::size_t>(d)].to - week[static_cast<std::size_t>(d)].from == 6 * 3600);
  }

  const std::int64_t ref = kTue + 10 * 3600 + 7 * 60;
  const auto after = resolve_scope(TimeScope::after_result(0), kWedNoon, std::nullopt, {}, {ref});
  REQUIRE(after.size() == 1);
  CHECK(after[0] == Interval{ref + 1, kTue + 86400});
  const auto before = resolve_scope(TimeScope::before_result(0), kWedNoon, std::nullopt, {}, {ref});
  CHECK(before[0] == Interval{kTue, ref});
  CHECK_THROWS_AS(resolve_scope(TimeScope::after_result(0), kWedNoon, std::nullopt, {}, {std::nullopt}), Error);
  CHECK_THROWS_AS(resolve_scope(TimeScope::after_result(1), kWedNoon, std::nullopt, {}, {ref}), Error);

  CHECK(resolve_scope(TimeScope::all(), kWedNoon, std::nullopt).empty());
  const auto all = resolve_scope(TimeScope::all(), kWedNoon, Interval{kTue + 100, kTue + 86400 + 50});
  CHECK(all.size() == 2);

  const auto abs = resolve_scope(TimeScope::absolute(kTue + 3600, kTue + 86400 + 3600, TimeOfDay::Night), kWedNoon, std::nullopt);
  REQUIRE(abs.size() == 2);
  CHECK(abs[0] == Interval{kTue + 3600, kTue + 6 * 3600});
  CHECK(abs[1] == Interval{kTue + 86400, kTue + 86400 + 3600});
}

TEST_CASE("scope and spec JSON round trip") {
  const std::vector<TimeScope> scopes = {
      TimeScope::all(),
      TimeScope::relative(RelativeSpan::LastWeek, TimeOfDay::Evening),
      TimeScope::named_day(5, true, TimeOfDay::Night),
      TimeScope::absolute(10, 20),
      TimeScope::after_result(0),
      TimeScope::before_result(2)};
  for (const TimeScope& s : scopes) CHECK(TimeScope::from_json(s.to_json()) == s);
  QuerySpec q;
  q.function = QueryFunction::CountingDays;
  q.contexts = {"at home"};
  q.scope = scopes[1];
  q.per_day = true;
  CHECK(QuerySpec::from_json(q.to_json()) == q);
  CHECK_THROWS_AS(QuerySpec::from_json({{"function", "FlyToMoon"}, {"contexts", {"x"}}}), Error);
  CHECK_THROWS_AS(QuerySpec::from_json({{"function", "CalculateDuration"}}), Error);
  CHECK(describe_scope(scopes[1]) == "last week in the evening");
  CHECK(describe_scope(scopes[2]) == "last Friday at night");
  CHECK(describe_scope(TimeScope::named_day(2, false)) == "on Tuesday");
  CHECK(describe_scope(scopes[0]).empty());
}

TEST_CASE("duration rendering") {
  std::vector<int> minutes;
  for (int i = 0; i < 35; ++i) minutes.push_back(6 * 60 + i);
  Fixture f(minute_timeline(kTue, minutes, {"exercise"}), {"exercise", "sitting"}, kWedNoon);
  const auto tue = resolve_scope(TimeScope::named_day(2, false), kWedNoon, std::nullopt);
  SensorContext c = calculate_duration(f.env, "exercise", tue, "on Tuesday");
  CHECK(c.values["minutes"] == 35);
  CHECK(c.text == "You spent 35 minutes exercise on Tuesday.");
  CHECK(c.text == render_context(c.values));
  SensorContext none = calculate_duration(f.env, "sitting", tue, "on Tuesday");
  CHECK(none.values["minutes"] == 0);
  CHECK(none.text == "You had no recorded time sitting on Tuesday.");
}

TEST_CASE("episodes join at the gap boundary") {
  const std::vector<std::int64_t> a = {600, 660, 720, 2400, 2460};
  CHECK(count_episodes(a, 300) == 2);
  const std::vector<std::int64_t> b = {600, 840, 1140};
  CHECK(count_episodes(b, 300) == 1);
  const std::vector<std::int64_t> c = {600, 901};
  CHECK(count_episodes(c, 300) == 2);
  CHECK(count_episodes({}, 300) == 0);

  Fixture f(minute_timeline(kTue, {10, 11, 12, 40, 41}, {"grooming"}), {"grooming", "x"}, kWedNoon);
  SensorContext cf = counting_frequency(f.env, "grooming", {{kTue, kTue + 86400}}, "on Tuesday");
  CHECK(cf.values["count"] == 2);
  CHECK(cf.text == "You grooming 2 times on Tuesday.");
}

TEST_CASE("first and last detection") {
  Fixture f(minute_timeline(kTue, {9 * 60 + 3, 9 * 60 + 47, 18 * 60 + 20}, {"eating"}), {"eating", "x"}, kWedNoon);
  const std::vector<Interval> day = {{kTue, kTue + 86400}};
  CHECK(detect_first_time(f.env, "eating", day, "").values["time"] == "09:03");
  CHECK(detect_last_time(f.env, "eating", day, "").values["time"] == "18:20");
  CHECK(detect_last_time(f.env, "eating", day, "").text == "The last time you were eating was around 18:20.");
  SensorContext none = detect_first_time(f.env, "x", day, "on Tuesday");
  CHECK(none.values["timestamp"].is_null());
  CHECK(none.text == "X was not detected on Tuesday.");
}

TEST_CASE("activity detection ranks by minutes then label") {
  Timeline t = minute_timeline(kTue, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}, {"sitting"});
  Fixture f(std::move(t), {"sitting", "standing", "walking"}, kWedNoon);
  SensorContext c = detect_activity(f.env, {{kTue, kTue + 86400}}, "on Tuesday");
  REQUIRE(c.values["activities"].size() == 1);
  CHECK(c.values["activities"][0]["label"] == "sitting");
  CHECK(c.values["activities"][0]["minutes"] == 12);
  CHECK(c.text == "Detected activities on Tuesday: sitting for 12 minutes.");

  Timeline mixed = minute_timeline(kTue, {0, 1, 2}, {"walking"});
  for (int m : {3, 4}) mixed.windows.push_back(minute_timeline(kTue, {m}, {"sitting"}).windows[0]);
  for (int m : {5, 6}) mixed.windows.push_back(minute_timeline(kTue, {m}, {"standing"}).windows[0]);
  Fixture g(std::move(mixed), {"sitting", "standing", "walking"}, kWedNoon);
  SensorContext k3 = detect_activity(g.env, {{kTue, kTue + 86400}}, "");
  REQUIRE(k3.values["activities"].size() == 3);
  CHECK(k3.values["activities"][0]["label"] == "walking");
  CHECK(k3.values["activities"][1]["label"] == "sitting");
  CHECK(k3.values["activities"][2]["label"] == "standing");

  // equal minutes: label order wins regardless of vocabulary order
  Timeline tie = minute_timeline(kTue, {0, 1}, {"standing"});
  for (int m : {2, 3}) tie.windows.push_back(minute_timeline(kTue, {m}, {"sitting"}).windows[0]);
  Fixture h(std::move(tie), {"walking", "standing", "sitting"}, kWedNoon);
  SensorContext tied = detect_activity(h.env, {{kTue, kTue + 86400}}, "");
  REQUIRE(tied.values["activities"].size() == 2);
  CHECK(tied.values["activities"][0]["label"] == "sitting");
  CHECK(tied.values["activities"][1]["label"] == "standing");

  SensorContext empty = detect_activity(g.env, {}, "yesterday");
  CHECK(empty.values["activities"].empty());
  CHECK(empty.text == "There was no confident activity detected yesterday.");
}

TEST_CASE("counting days") {
  Timeline t;
  const std::int64_t mon = 1442793600;
  for (int d : {0, 1, 3, 4, 6}) {
    SensorWindow w;
    w.user_id = "u";
    w.timestamp = mon + 86400LL * d + 3600;
    w.labels = {"at home"};
    t.windows.push_back(w);
  }
  Fixture f(std::move(t), {"at home", "at work"}, kWedNoon);
  const auto week = resolve_scope(TimeScope::relative(RelativeSpan::LastWeek), kWedNoon, std::nullopt);
  SensorContext c = counting_days(f.env, "at home", group_by_day(week), "last week");
  CHECK(c.values["days"] == 5);
  CHECK(c.values["total_days"] == 7);
  CHECK(c.text == "You were at home on 5 of the last 7 days last week.");
  CHECK(counting_days(f.env, "at work", group_by_day(week), "").values["days"] == 0);
}

TEST_CASE("execute expands per day and chains result references") {
  synth::Config cfg;
  cfg.days = 14;
  cfg.start = 1442793600 - 5 * 86400;  // Wed 09-16 through Tue 09-29
  Timeline t = synth::generate(cfg);
  Fixture f(std::move(t), synth::label_phrases(), kWedNoon);
  f.env.user_id = "user1";

  QuerySpec day_query;
  day_query.contexts = {"at home"};
  day_query.scope = TimeScope::relative(RelativeSpan::LastWeek);
  day_query.per_day = true;
  auto days = execute({day_query}, f.env);
  REQUIRE(days.size() == 7);
  CHECK(days[0].values["day"] == "Monday");
  CHECK(days[6].values["day"] == "Sunday");
  CHECK(days[0].values["scope"] == "on Monday");

  QuerySpec compare;
  compare.contexts = {"sitting", "standing"};
  compare.scope = TimeScope::relative(RelativeSpan::Yesterday);
  auto two = execute({compare}, f.env);
  REQUIRE(two.size() == 2);
  CHECK(two[0].values["context"] == "sitting");
  CHECK(two[1].values["context"] == "standing");

  // Hand oracle on the synthetic Tuesday: leaving home is the last at-home
  // minute before the morning drive on a workday.
  QuerySpec left;
  left.function = QueryFunction::DetectLastTime;
  left.contexts = {"at home"};
  left.scope = TimeScope::named_day(2, false);
  QuerySpec after;
  after.function = QueryFunction::DetectActivity;
  after.scope = TimeScope::after_result(0);
  auto chain = execute({left, after}, f.env);
  REQUIRE(chain.size() == 2);
  const std::int64_t t_ref = chain[0].values["timestamp"].get<std::int64_t>();
  long expect_after = 0;
  for (const SensorWindow& w : f.timeline.windows) {
    if (w.timestamp > t_ref && w.timestamp < kTue + 86400 && w.has_label("at home")) ++expect_after;
  }
  CHECK(expect_after == 0);
  for (const auto& a : chain[1].values["activities"]) CHECK(a["label"] != "at home");

  QuerySpec dangling = after;
  dangling.scope = TimeScope::after_result(0);
  CHECK_THROWS_AS(execute({dangling}, f.env), Error);
}

TEST_CASE("oracle equivalence on random timelines") {
  std::mt19937_64 rng(99);
  const std::vector<std::string> phrases = {"a", "b", "c", "d e"};
  LabelVocabulary vocab(phrases);
  int mismatches = 0;
  std::string detail;
  for (int trial = 0; trial < 150; ++trial) {
    Timeline t = oracle::random_timeline(rng, phrases, 2);
    WindowIndex index = WindowIndex::from_timeline(t);
    const std::int64_t now = 1442793600 + static_cast<std::int64_t>(rng() % (20 * 86400));
    const TimeScope scope = oracle::random_scope(rng, now);
    const std::string user = "u" + std::to_string(rng() % 2);
    mismatches += oracle::compare_functions(t, index, vocab, scope, now, user, phrases[rng() % phrases.size()], &detail);
  }
  INFO(detail);
  CHECK(mismatches == 0);
}

TEST_CASE("monotone and additive in the threshold and intervals") {
  std::mt19937_64 rng(5);
  std::vector<std::string> phrases = {"p", "q"};
  LabelVocabulary vocab(phrases);
  Timeline t = minute_timeline(kTue, [] {
    std::vector<int> v;
    for (int i = 0; i < 1440; ++i) v.push_back(i);
    return v;
  }(), {});
  WindowIndex index = WindowIndex::from_timeline(t);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> field(2, std::vector<double>(1440));
    for (auto& row : field) {
      for (double& x : row) x = static_cast<double>(rng() % 1000) / 1000.0;
    }
    TableScorer scorer(vocab, field);
    QueryEnv env;
    env.index = &index;
    env.scorer = &scorer;
    env.vocab = &vocab;
    long prev = -1;
    for (double h : {0.8, 0.5, 0.2}) {
      env.options.threshold = h;
      const long g = calculate_duration(env, "p", {{kTue, kTue + 86400}}, "").values["minutes"].get<long>();
      CHECK(g >= prev);
      prev = g;
    }
    env.options.threshold = 0.5;
    const std::int64_t cut = kTue + 60LL * static_cast<std::int64_t>(1 + rng() % 1438);
    const long whole = calculate_duration(env, "p", {{kTue, kTue + 86400}}, "").values["minutes"].get<long>();
    const long a = calculate_duration(env, "p", {{kTue, cut}}, "").values["minutes"].get<long>();
    const long b = calculate_duration(env, "p", {{cut, kTue + 86400}}, "").values["minutes"].get<long>();
    CHECK(whole == a + b);
    const auto first = detect_first_time(env, "q", {{kTue, kTue + 86400}}, "").values;
    const auto last = detect_last_time(env, "q", {{kTue, kTue + 86400}}, "").values;
    if (!first["timestamp"].is_null()) CHECK(first["timestamp"].get<std::int64_t>() <= last["timestamp"].get<std::int64_t>());
  }
}

}  // namespace
}  // namespace tsqa
