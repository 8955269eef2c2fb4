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

#ifndef TSQA_TIMELINE_HPP_
#define TSQA_TIMELINE_HPP_

// Timeline ingest: multimodal feature CSV -> ordered windows with label sets,
// plus the label vocabulary and missing-modality imputation.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace tsqa {

struct Modality {
  std::string name;
  int dim = 0;

  bool operator==(const Modality&) const = default;
};

// Ordered modalities and their feature widths. The total feature dimension
// is the sum of the widths.
class ModalitySchema {
 public:
  ModalitySchema() = default;
  explicit ModalitySchema(std::vector<Modality> modalities);

  const std::vector<Modality>& modalities() const { return modalities_; }
  std::size_t size() const { return modalities_.size(); }
  const Modality& operator[](std::size_t i) const { return modalities_[i]; }
  int total_dim() const;
  std::optional<std::size_t> find(std::string_view name) const;

  static ModalitySchema from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  bool operator==(const ModalitySchema&) const = default;

 private:
  std::vector<Modality> modalities_;
};

ModalitySchema load_schema(const std::filesystem::path& path);

// One recorded window. Missing cells hold NaN until impute_missing() runs.
struct SensorWindow {
  std::int64_t timestamp = 0;
  std::string user_id;
  std::vector<std::vector<double>> features;  // one vector per modality
  std::vector<bool> missing;                  // whole-modality missing flags
  std::vector<std::string> labels;            // sorted, distinct

  bool has_label(std::string_view phrase) const;

  // NaN cells compare equal to NaN cells; everything else is exact.
  bool operator==(const SensorWindow& other) const;
};

struct Timeline {
  ModalitySchema schema;
  std::vector<SensorWindow> windows;  // sorted by (user_id, timestamp)
  int window_span_seconds = 60;
  int window_record_seconds = 20;

  bool operator==(const Timeline&) const = default;

  std::size_t size() const { return windows.size(); }
  bool empty() const { return windows.empty(); }
  std::vector<std::string> users() const;
};

class LabelVocabulary {
 public:
  LabelVocabulary() = default;
  // Phrases must be distinct; their order defines the label indices.
  explicit LabelVocabulary(std::vector<std::string> phrases);

  const std::vector<std::string>& phrases() const { return phrases_; }
  std::size_t size() const { return phrases_.size(); }
  const std::string& operator[](std::size_t i) const { return phrases_[i]; }
  std::optional<int> index_of(std::string_view phrase) const;
  bool contains(std::string_view phrase) const { return index_of(phrase).has_value(); }

  bool operator==(const LabelVocabulary&) const = default;

 private:
  std::vector<std::string> phrases_;
  std::vector<int> sorted_;  // permutation sorting phrases_ for lookup
};

// Columns: `timestamp`, `user_id`, `f:<modality>:<k>`, `label:<phrase>`.
// Rows may interleave users but each user's timestamps must strictly increase.
Timeline parse_csv(std::istream& in, const ModalitySchema& schema);
Timeline load_csv(const std::filesystem::path& path, const ModalitySchema& schema);

// Writes the canonical column order: timestamp, user_id, features in schema
// order, then one label column per phrase in `label_columns` (or, when empty,
// every phrase appearing in the timeline, sorted).
void write_csv(std::ostream& out, const Timeline& timeline, std::span<const std::string> label_columns = {});

LabelVocabulary build_vocabulary(const Timeline& timeline);

// Replaces missing cells with the per-user mean of that feature, falling back
// to the global mean. Observed values are never modified.
Timeline impute_missing(Timeline timeline);

}  // namespace tsqa

#endif  // TSQA_TIMELINE_HPP_
