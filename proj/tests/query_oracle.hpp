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

#ifndef TSQA_TESTS_QUERY_ORACLE_HPP_
#define TSQA_TESTS_QUERY_ORACLE_HPP_

// Brute-force recounts over ground-truth labels. Scope membership is decided
// per window (day set plus hour range) rather than through interval lists.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tsqa/query.hpp"
#include "tsqa/timeline.hpp"

namespace tsqa::oracle {

inline std::int64_t day_number(std::int64_t t) {
  std::int64_t d = t / 86400;
  if (t < 0 && d * 86400 != t) --d;
  return d;
}

inline int weekday_number(std::int64_t day) { return static_cast<int>(((day % 7) + 7 + 4) % 7); }

struct Membership {
  std::set<std::int64_t> days;  // whole days in scope
  int hour_from = 0;
  int hour_to = 24;
  std::optional<std::int64_t> lo;  // extra timestamp bounds [lo, hi)
  std::optional<std::int64_t> hi;

  bool contains(std::int64_t t) const {
    if (!days.count(day_number(t))) return false;
    const int hour = static_cast<int>((t - day_number(t) * 86400) / 3600);
    if (hour < hour_from || hour >= hour_to) return false;
    if (lo && t < *lo) return false;
    if (hi && t >= *hi) return false;
    return true;
  }
};

inline Membership membership(const TimeScope& scope, std::int64_t now, const std::vector<const SensorWindow*>& windows,
                             std::optional<std::int64_t> ref) {
  Membership m;
  const DayParts parts;
  std::tie(m.hour_from, m.hour_to) = parts.range(scope.time_of_day);
  const std::int64_t today = day_number(now);
  switch (scope.kind) {
    case ScopeKind::RelativeSpan:
      if (scope.span == RelativeSpan::Today) m.days.insert(today);
      if (scope.span == RelativeSpan::Yesterday) m.days.insert(today - 1);
      if (scope.span == RelativeSpan::LastWeek) {
        std::int64_t monday = today;
        while (weekday_number(monday) != 1) --monday;
        for (std::int64_t d = monday - 7; d < monday; ++d) m.days.insert(d);
      }
      if (scope.span == RelativeSpan::All && !windows.empty()) {
        std::int64_t first = day_number(windows.front()->timestamp), last = first;
        for (const SensorWindow* w : windows) {
          first = std::min(first, day_number(w->timestamp));
          last = std::max(last, day_number(w->timestamp));
        }
        for (std::int64_t d = first; d <= last; ++d) m.days.insert(d);
      }
      break;
    case ScopeKind::NamedDay: {
      std::int64_t d = scope.exclude_today ? today - 1 : today;
      while (weekday_number(d) != scope.weekday) --d;
      m.days.insert(d);
      break;
    }
    case ScopeKind::AbsoluteRange:
      for (std::int64_t d = day_number(scope.from); d <= day_number(scope.to - 1); ++d) {
        // keep only days whose clipped part is non-empty
        const std::int64_t lo = std::max(scope.from, d * 86400 + 3600 * m.hour_from);
        const std::int64_t hi = std::min(scope.to, d * 86400 + 3600 * m.hour_to);
        if (lo < hi) m.days.insert(d);
      }
      m.lo = scope.from;
      m.hi = scope.to;
      break;
    case ScopeKind::AfterResult:
    case ScopeKind::BeforeResult: {
      const std::int64_t d = day_number(*ref);
      const std::int64_t lo = scope.kind == ScopeKind::AfterResult ? *ref + 1 : d * 86400;
      const std::int64_t hi = scope.kind == ScopeKind::AfterResult ? (d + 1) * 86400 : *ref;
      if (std::max(lo, d * 86400 + 3600 * m.hour_from) < std::min(hi, d * 86400 + 3600 * m.hour_to)) m.days.insert(d);
      m.lo = lo;
      m.hi = hi;
      break;
    }
  }
  return m;
}

struct Recount {
  long minutes = 0;
  long episodes = 0;
  long days_with = 0;
  long total_days = 0;
  std::optional<std::int64_t> first;
  std::optional<std::int64_t> last;
  std::vector<std::pair<std::string, long>> top;  // DetectActivity
};

inline Recount recount(const std::vector<const SensorWindow*>& windows, const Membership& m, const std::string& context,
                       const std::vector<std::string>& vocab, int top_k, int gap_minutes) {
  Recount r;
  r.total_days = static_cast<long>(m.days.size());
  std::map<std::int64_t, std::vector<std::int64_t>> by_day;
  for (const SensorWindow* w : windows) {
    if (!m.contains(w->timestamp) || !w->has_label(context)) continue;
    ++r.minutes;
    by_day[day_number(w->timestamp)].push_back(w->timestamp);
    if (!r.first || w->timestamp < *r.first) r.first = w->timestamp;
    if (!r.last || w->timestamp > *r.last) r.last = w->timestamp;
  }
  for (auto& [d, ts] : by_day) {
    std::sort(ts.begin(), ts.end());
    ++r.days_with;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (i == 0 || ts[i] - ts[i - 1] > 60 * gap_minutes) ++r.episodes;
    }
  }
  std::vector<std::pair<std::string, long>> counts;
  for (const std::string& label : vocab) {
    long n = 0;
    for (const SensorWindow* w : windows) n += (m.contains(w->timestamp) && w->has_label(label)) ? 1 : 0;
    if (n > 0) counts.emplace_back(label, n);
  }
  std::sort(counts.begin(), counts.end(),
            [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  if (counts.size() > static_cast<std::size_t>(top_k)) counts.resize(static_cast<std::size_t>(top_k));
  r.top = counts;
  return r;
}

// Windows of one user, in timeline order.
inline std::vector<const SensorWindow*> user_windows(const Timeline& t, const std::string& user) {
  std::vector<const SensorWindow*> out;
  for (const SensorWindow& w : t.windows) {
    if (w.user_id == user) out.push_back(&w);
  }
  return out;
}

// Random timeline without features: minute windows with gaps and sticky
// random label sets.
inline Timeline random_timeline(std::mt19937_64& rng, const std::vector<std::string>& vocab, int users) {
  Timeline t;
  for (int u = 0; u < users; ++u) {
    std::int64_t ts = 1442793600 + 86400LL * static_cast<std::int64_t>(rng() % 14) + 60LL * static_cast<std::int64_t>(rng() % 1440);
    const int n = static_cast<int>(rng() % 4000);
    std::vector<std::string> labels;
    for (int i = 0; i < n; ++i) {
      if (labels.empty() || rng() % 20 == 0) {
        labels.clear();
        for (const std::string& v : vocab) {
          if (rng() % 4 == 0) labels.push_back(v);
        }
        std::sort(labels.begin(), labels.end());
      }
      SensorWindow w;
      w.user_id = "u" + std::to_string(u);
      w.timestamp = ts;
      w.labels = labels;
      t.windows.push_back(std::move(w));
      const std::uint64_t g = rng() % 100;
      ts += g < 80 ? 60 : g < 95 ? 60 * static_cast<std::int64_t>(2 + rng() % 8) : 60 * static_cast<std::int64_t>(rng() % 2000 + 1);
    }
  }
  return t;
}

inline TimeScope random_scope(std::mt19937_64& rng, std::int64_t now) {
  const auto tod = static_cast<TimeOfDay>(rng() % 5);
  switch (rng() % 6) {
    case 0: return TimeScope::relative(RelativeSpan::Today, tod);
    case 1: return TimeScope::relative(RelativeSpan::Yesterday, tod);
    case 2: return TimeScope::relative(RelativeSpan::LastWeek, tod);
    case 3: return TimeScope::all(tod);
    case 4: return TimeScope::named_day(static_cast<int>(rng() % 7), rng() % 2 == 0, tod);
    default: {
      const std::int64_t from = now - static_cast<std::int64_t>(rng() % (10 * 86400));
      return TimeScope::absolute(from, from + 1 + static_cast<std::int64_t>(rng() % (3 * 86400)), tod);
    }
  }
}

// Runs all six functions (plus an after/before chain) through execute() and
// counts payload disagreements with the recount.
inline int compare_functions(const Timeline& t, const WindowIndex& index, const LabelVocabulary& vocab,
                             const TimeScope& scope, std::int64_t now, const std::string& user,
                             const std::string& context, std::string* detail = nullptr) {
  OracleScorer scorer(t);
  QueryEnv env;
  env.index = &index;
  env.scorer = &scorer;
  env.vocab = &vocab;
  env.user_id = user;
  env.now = now;
  const std::vector<const SensorWindow*> windows = user_windows(t, user);
  const Membership m = membership(scope, now, windows, std::nullopt);
  const Recount r = recount(windows, m, context, vocab.phrases(), env.options.top_k, env.options.gap_minutes);
  int bad = 0;
  auto fail = [&](const std::string& what) {
    ++bad;
    if (detail) *detail += what + "; ";
  };
  auto run = [&](QueryFunction f) {
    QuerySpec s;
    s.function = f;
    if (f != QueryFunction::DetectActivity) s.contexts = {context};
    s.scope = scope;
    return execute({s}, env).at(0).values;
  };
  if (run(QueryFunction::CalculateDuration)["minutes"].get<long>() != r.minutes) fail("duration");
  if (run(QueryFunction::CountingFrequency)["count"].get<long>() != r.episodes) fail("frequency");
  const auto days = run(QueryFunction::CountingDays);
  if (days["days"].get<long>() != r.days_with || days["total_days"].get<long>() != r.total_days) fail("days");
  const auto first = run(QueryFunction::DetectFirstTime)["timestamp"];
  if (first.is_null() != !r.first || (r.first && first.get<std::int64_t>() != *r.first)) fail("first");
  const auto last = run(QueryFunction::DetectLastTime)["timestamp"];
  if (last.is_null() != !r.last || (r.last && last.get<std::int64_t>() != *r.last)) fail("last");
  const auto acts = run(QueryFunction::DetectActivity)["activities"];
  if (acts.size() != r.top.size()) {
    fail("activity size");
  } else {
    for (std::size_t i = 0; i < acts.size(); ++i) {
      if (acts[i]["label"] != r.top[i].first || acts[i]["minutes"].get<long>() != r.top[i].second) fail("activity");
    }
  }
  // chained scopes bound to the first/last detection
  for (bool after : {true, false}) {
    const std::optional<std::int64_t> ref = after ? r.last : r.first;
    if (!ref) continue;
    QuerySpec anchor;
    anchor.function = after ? QueryFunction::DetectLastTime : QueryFunction::DetectFirstTime;
    anchor.contexts = {context};
    anchor.scope = scope;
    QuerySpec follow;
    follow.function = QueryFunction::DetectActivity;
    follow.scope = after ? TimeScope::after_result(0) : TimeScope::before_result(0);
    const auto out = execute({anchor, follow}, env);
    const Membership cm = membership(follow.scope, now, windows, ref);
    const Recount cr = recount(windows, cm, context, vocab.phrases(), env.options.top_k, env.options.gap_minutes);
    const auto& got = out.at(1).values["activities"];
    bool same = got.size() == cr.top.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i]["label"] == cr.top[i].first && got[i]["minutes"].get<long>() == cr.top[i].second;
    }
    if (!same) fail(after ? "after chain" : "before chain");
  }
  return bad;
}

}  // namespace tsqa::oracle

#endif  // TSQA_TESTS_QUERY_ORACLE_HPP_
