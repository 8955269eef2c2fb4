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

#ifndef TSQA_SYNTH_HPP_
#define TSQA_SYNTH_HPP_

// Synthetic multi-day timelines: a daily routine of (activity, location)
// segments, one window per minute, features drawn around per-label centres.

#include <cstdint>
#include <string>
#include <vector>

#include "tsqa/timeline.hpp"

namespace tsqa::synth {

struct Config {
  int users = 1;
  int days = 7;
  std::int64_t start = 1442793600;  // Monday 2015-09-21 00:00 UTC
  std::uint64_t seed = 0;
  double centre_scale = 2.0;
  double noise = 0.3;
  double missing_rate = 0.0;  // per window and modality
  double unlabeled_rate = 0.0;
};

ModalitySchema schema();  // acc:6, audio:4, phone:3
const std::vector<std::string>& activities();
const std::vector<std::string>& locations();
std::vector<std::string> label_phrases();  // activities then locations

struct Segment {
  int start_minute = 0;  // minute of day
  int minutes = 0;
  std::string activity;
  std::string location;
};

// The routine of one day; covers all 1440 minutes.
std::vector<Segment> day_plan(int weekday, std::uint64_t seed);

Timeline generate(const Config& config);

}  // namespace tsqa::synth

#endif  // TSQA_SYNTH_HPP_
