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

#include "tsqa/window_index.hpp"

#include <algorithm>

#include "tsqa/error.hpp"

namespace tsqa {

void check_intervals(const std::vector<Interval>& intervals) {
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (intervals[i].to <= intervals[i].from) {
      throw Error(ErrorCode::kPrecondition, "empty or reversed interval");
    }
    if (i > 0 && intervals[i].from < intervals[i - 1].to) {
      throw Error(ErrorCode::kPrecondition, "intervals must be sorted and disjoint");
    }
  }
}

void WindowIndex::append(std::string_view user_id, std::int64_t timestamp) {
  if (blocks_.empty() || blocks_.back().user_id != user_id) {
    if (block(user_id) != nullptr) {
      throw Error(ErrorCode::kOrdering, "records of user '" + std::string(user_id) + "' are not contiguous");
    }
    blocks_.push_back({std::string(user_id), timestamps_.size(), timestamps_.size()});
  } else if (timestamp <= timestamps_.back()) {
    throw Error(ErrorCode::kOrdering, "timestamps of user '" + std::string(user_id) + "' must increase");
  }
  timestamps_.push_back(timestamp);
  block_of_.push_back(static_cast<std::uint32_t>(blocks_.size() - 1));
  blocks_.back().end = timestamps_.size();
}

WindowIndex WindowIndex::from_timeline(const Timeline& timeline) {
  WindowIndex index;
  for (const SensorWindow& w : timeline.windows) index.append(w.user_id, w.timestamp);
  return index;
}

const WindowIndex::Block* WindowIndex::block(std::string_view user_id) const {
  for (const Block& b : blocks_) {
    if (b.user_id == user_id) return &b;
  }
  return nullptr;
}

std::optional<std::size_t> WindowIndex::find(std::string_view user_id, std::int64_t timestamp) const {
  const Block* b = block(user_id);
  if (b == nullptr) return std::nullopt;
  auto first = timestamps_.begin() + static_cast<std::ptrdiff_t>(b->begin);
  auto last = timestamps_.begin() + static_cast<std::ptrdiff_t>(b->end);
  auto it = std::lower_bound(first, last, timestamp);
  if (it == last || *it != timestamp) return std::nullopt;
  return static_cast<std::size_t>(it - timestamps_.begin());
}

std::pair<std::size_t, std::size_t> WindowIndex::range(const Block& b, Interval interval) const {
  auto first = timestamps_.begin() + static_cast<std::ptrdiff_t>(b.begin);
  auto last = timestamps_.begin() + static_cast<std::ptrdiff_t>(b.end);
  auto lo = std::lower_bound(first, last, interval.from);
  auto hi = std::lower_bound(lo, last, interval.to);
  return {static_cast<std::size_t>(lo - timestamps_.begin()), static_cast<std::size_t>(hi - timestamps_.begin())};
}

std::vector<std::size_t> WindowIndex::select(const std::vector<Interval>& intervals,
                                             const std::optional<std::string>& user_id) const {
  check_intervals(intervals);
  std::vector<std::size_t> out;
  for (const Block& b : blocks_) {
    if (user_id && b.user_id != *user_id) continue;
    for (const Interval& iv : intervals) {
      auto [lo, hi] = range(b, iv);
      for (std::size_t r = lo; r < hi; ++r) out.push_back(r);
    }
  }
  return out;
}

std::optional<Interval> WindowIndex::bounds(const std::optional<std::string>& user_id) const {
  std::optional<Interval> out;
  for (const Block& b : blocks_) {
    if (user_id && b.user_id != *user_id) continue;
    if (b.begin == b.end) continue;
    Interval iv{timestamps_[b.begin], timestamps_[b.end - 1] + 1};
    if (!out) {
      out = iv;
    } else {
      out->from = std::min(out->from, iv.from);
      out->to = std::max(out->to, iv.to);
    }
  }
  return out;
}

}  // namespace tsqa
