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

#include "tsqa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "tsqa/error.hpp"

namespace tsqa::synth {
namespace {

int between(std::mt19937_64& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Box-Muller on the portable uniform draw.
double gaussian(std::mt19937_64& rng) {
  double u1 = unit(rng);
  while (u1 <= 0.0) u1 = unit(rng);
  const double u2 = unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

class Planner {
 public:
  explicit Planner(std::mt19937_64& rng) : rng_(rng) {}

  void add(const std::string& activity, const std::string& location, int minutes) {
    if (minutes <= 0) return;
    minutes = std::min(minutes, 1440 - cursor_);
    if (minutes <= 0) return;
    plan_.push_back({cursor_, minutes, activity, location});
    cursor_ += minutes;
  }
  void until(const std::string& activity, const std::string& location, int minute_of_day) {
    add(activity, location, minute_of_day - cursor_);
  }
  int cursor() const { return cursor_; }
  std::vector<Segment> finish(const std::string& activity, const std::string& location) {
    until(activity, location, 1440);
    return plan_;
  }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64& rng_;
  int cursor_ = 0;
  std::vector<Segment> plan_;
};

}  // namespace

ModalitySchema schema() { return ModalitySchema({{"acc", 6}, {"audio", 4}, {"phone", 3}}); }

const std::vector<std::string>& activities() {
  static const std::vector<std::string> kActivities = {
      "sleeping", "grooming", "cooking", "eating",  "sitting", "standing",
      "walking",  "exercise", "driving", "in a meeting", "watching tv"};
  return kActivities;
}

const std::vector<std::string>& locations() {
  static const std::vector<std::string> kLocations = {"at home", "at work", "at the gym", "in a car", "outside"};
  return kLocations;
}

std::vector<std::string> label_phrases() {
  std::vector<std::string> out = activities();
  out.insert(out.end(), locations().begin(), locations().end());
  return out;
}

std::vector<Segment> day_plan(int weekday, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Planner p(rng);
  const bool workday = weekday >= 1 && weekday <= 5;
  p.until("sleeping", "at home", between(rng, 6 * 60, 7 * 60 + 30));
  p.add("grooming", "at home", between(rng, 10, 30));
  if (rng() % 3 != 0) p.add("cooking", "at home", between(rng, 8, 25));
  p.add("eating", "at home", between(rng, 10, 25));
  if (workday) {
    p.add("driving", "in a car", between(rng, 15, 40));
    const int lunch = between(rng, 12 * 60, 12 * 60 + 45);
    while (p.cursor() < lunch) {
      const int r = static_cast<int>(rng() % 6);
      const std::string act = r < 3 ? "sitting" : r == 3 ? "standing" : r == 4 ? "in a meeting" : "walking";
      p.add(act, "at work", std::min(between(rng, 10, 70), lunch - p.cursor()));
    }
    p.add("eating", "at work", between(rng, 20, 40));
    const int leave = between(rng, 17 * 60, 18 * 60 + 15);
    while (p.cursor() < leave) {
      const int r = static_cast<int>(rng() % 6);
      const std::string act = r < 3 ? "sitting" : r == 3 ? "in a meeting" : r == 4 ? "standing" : "walking";
      p.add(act, "at work", std::min(between(rng, 10, 70), leave - p.cursor()));
    }
    p.add("driving", "in a car", between(rng, 15, 40));
  } else {
    p.add("watching tv", "at home", between(rng, 30, 120));
    p.add("walking", "outside", between(rng, 20, 90));
    p.add("sitting", "outside", between(rng, 10, 60));
    p.add("walking", "outside", between(rng, 10, 40));
    p.until("sitting", "at home", between(rng, 13 * 60, 14 * 60));
    p.add("eating", "at home", between(rng, 15, 40));
    p.add("sitting", "at home", between(rng, 30, 120));
  }
  if (rng() % 2 == 0) {
    p.add("driving", "in a car", between(rng, 10, 20));
    p.add("exercise", "at the gym", between(rng, 30, 75));
    p.add("driving", "in a car", between(rng, 10, 20));
  } else if (rng() % 2 == 0) {
    p.add("exercise", "outside", between(rng, 20, 45));
  }
  p.add("cooking", "at home", between(rng, 15, 45));
  p.add("eating", "at home", between(rng, 15, 35));
  p.until("watching tv", "at home", between(rng, 21 * 60, 22 * 60 + 30));
  p.add("grooming", "at home", between(rng, 5, 20));
  return p.finish("sleeping", "at home");
}

Timeline generate(const Config& config) {
  if (config.users <= 0 || config.days <= 0) throw Error(ErrorCode::kPrecondition, "users and days must be positive");
  Timeline t;
  t.schema = schema();
  const std::vector<std::string> phrases = label_phrases();

  // per-label centres per modality
  std::mt19937_64 centre_rng(config.seed ^ 0x5eedc0ffeeULL);
  std::vector<std::vector<std::vector<double>>> centres(phrases.size());
  for (auto& c : centres) {
    for (const Modality& m : t.schema.modalities()) {
      std::vector<double> v(static_cast<std::size_t>(m.dim));
      for (double& x : v) x = config.centre_scale * gaussian(centre_rng);
      c.push_back(v);
    }
  }
  auto index_of = [&](const std::string& phrase) {
    return static_cast<std::size_t>(std::find(phrases.begin(), phrases.end(), phrase) - phrases.begin());
  };

  std::mt19937_64 rng(config.seed);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int u = 0; u < config.users; ++u) {
    const std::string user = "user" + std::to_string(u + 1);
    for (int d = 0; d < config.days; ++d) {
      const std::int64_t day = config.start + 86400LL * d;
      const int weekday = static_cast<int>(((day / 86400 + 4) % 7 + 7) % 7);
      for (const Segment& s : day_plan(weekday, rng())) {
        const std::size_t a = index_of(s.activity);
        const std::size_t l = index_of(s.location);
        for (int k = 0; k < s.minutes; ++k) {
          SensorWindow w;
          w.timestamp = day + 60LL * (s.start_minute + k);
          w.user_id = user;
          w.missing.assign(t.schema.size(), false);
          for (std::size_t m = 0; m < t.schema.size(); ++m) {
            std::vector<double> f(static_cast<std::size_t>(t.schema[m].dim));
            for (std::size_t i = 0; i < f.size(); ++i) f[i] = centres[a][m][i] + centres[l][m][i] + config.noise * gaussian(rng);
            if (config.missing_rate > 0.0 && unit(rng) < config.missing_rate) {
              std::fill(f.begin(), f.end(), nan);
              w.missing[m] = true;
            }
            w.features.push_back(std::move(f));
          }
          if (!(config.unlabeled_rate > 0.0 && unit(rng) < config.unlabeled_rate)) {
            w.labels = {s.activity, s.location};
            std::sort(w.labels.begin(), w.labels.end());
          }
          t.windows.push_back(std::move(w));
        }
      }
    }
  }
  return t;
}

}  // namespace tsqa::synth
