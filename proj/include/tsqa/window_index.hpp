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

#ifndef TSQA_WINDOW_INDEX_HPP_
#define TSQA_WINDOW_INDEX_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tsqa/timeline.hpp"

namespace tsqa {

// Half-open time range [from, to) in unix seconds.
struct Interval {
  std::int64_t from = 0;
  std::int64_t to = 0;

  bool contains(std::int64_t t) const { return t >= from && t < to; }
  bool operator==(const Interval&) const = default;
};

// Throws a precondition error unless intervals are non-empty ranges, sorted
// and pairwise disjoint.
void check_intervals(const std::vector<Interval>& intervals);

// Record positions grouped into contiguous per-user blocks with increasing
// timestamps.
class WindowIndex {
 public:
  struct Block {
    std::string user_id;
    std::size_t begin = 0;
    std::size_t end = 0;
  };

  WindowIndex() = default;

  // Records must arrive grouped by user with strictly increasing timestamps.
  void append(std::string_view user_id, std::int64_t timestamp);

  static WindowIndex from_timeline(const Timeline& timeline);

  std::size_t size() const { return timestamps_.size(); }
  std::int64_t timestamp(std::size_t record) const { return timestamps_[record]; }
  const std::string& user_id(std::size_t record) const { return blocks_[block_of_[record]].user_id; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block* block(std::string_view user_id) const;

  std::optional<std::size_t> find(std::string_view user_id, std::int64_t timestamp) const;

  // Records of one block inside [from, to) as a position range.
  std::pair<std::size_t, std::size_t> range(const Block& block, Interval interval) const;

  // All records inside the intervals, optionally restricted to one user, in
  // block order then time order.
  std::vector<std::size_t> select(const std::vector<Interval>& intervals,
                                  const std::optional<std::string>& user_id = std::nullopt) const;

  // Half-open range from the earliest to just past the latest timestamp.
  std::optional<Interval> bounds(const std::optional<std::string>& user_id = std::nullopt) const;

 private:
  std::vector<std::int64_t> timestamps_;
  std::vector<std::uint32_t> block_of_;
  std::vector<Block> blocks_;
};

}  // namespace tsqa

#endif  // TSQA_WINDOW_INDEX_HPP_
