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

#ifndef TSQA_STORE_HPP_
#define TSQA_STORE_HPP_

// Persisted window embeddings, the learned similarity function and threshold
// matching over time intervals.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "tsqa/encoders.hpp"
#include "tsqa/timeline.hpp"
#include "tsqa/window_index.hpp"

namespace tsqa {

struct EmbeddingRecord {
  std::int64_t timestamp = 0;
  std::string user_id;
  std::vector<float> vector;
};

class EmbeddingStore {
 public:
  explicit EmbeddingStore(int embed_dim = 0) : embed_dim_(embed_dim) {}

  void append(std::int64_t timestamp, std::string_view user_id, std::span<const float> vector);

  int embed_dim() const { return embed_dim_; }
  std::size_t size() const { return index_.size(); }
  const WindowIndex& index() const { return index_; }

  std::span<const float> vector(std::size_t record) const {
    return {data_.data() + record * static_cast<std::size_t>(embed_dim_), static_cast<std::size_t>(embed_dim_)};
  }
  Embedding embedding(std::size_t record) const;
  EmbeddingRecord record(std::size_t i) const;

  bool operator==(const EmbeddingStore& other) const;

 private:
  int embed_dim_;
  WindowIndex index_;
  std::vector<float> data_;
};

// One record per window in timeline order; vectors are rounded to f32.
EmbeddingStore build_store(const Parameters& params, const Timeline& timeline);

void write_store(std::ostream& out, const EmbeddingStore& store);
EmbeddingStore read_store(std::istream& in);
void save_store(const std::filesystem::path& path, const EmbeddingStore& store);
EmbeddingStore load_store(const std::filesystem::path& path);

enum class SimilarityMode { Mlp, CosineSigmoid };

struct SimilarityConfig {
  SimilarityMode mode = SimilarityMode::Mlp;
  int hidden = 512;
  int epochs = 30;
  int batch_size = 128;
  double learning_rate = 1e-3;
  int negatives_per_positive = 3;
  double threshold = 0.5;  // used to score the cosine scale grid
  std::uint64_t seed = 0;

  void validate() const;
  static SimilarityConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

inline constexpr double kCosineScaleGrid[] = {1.0, 2.0, 5.0, 10.0, 20.0};

// Scores a (sensor, label) embedding pair in (0, 1). Logits are clamped to
// [-30, 30] so the sigmoid never rounds to 0 or 1.
struct SimilarityModel {
  SimilarityMode mode = SimilarityMode::CosineSigmoid;
  int embed_dim = 0;
  double scale = 10.0;

  // mlp: input [sensor; label], one ReLU hidden layer, sigmoid output.
  Eigen::MatrixXd w1;  // hidden x 2*embed_dim
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0.0;

  int hidden() const { return static_cast<int>(b1.size()); }

  static SimilarityModel cosine(int embed_dim, double scale);

  // Sensor-side hidden projection; identical arithmetic for cached and direct
  // scoring.
  Eigen::VectorXd project_sensor(const Eigen::VectorXd& sensor) const;
  // Label-side hidden projection including the hidden bias.
  Eigen::VectorXd project_label(const Eigen::VectorXd& label) const;
  double logit_from_projections(const Eigen::VectorXd& sensor_proj, const Eigen::VectorXd& label_proj) const;

  double logit(const Eigen::VectorXd& sensor, const Eigen::VectorXd& label) const;
  double score(const Eigen::VectorXd& sensor, const Eigen::VectorXd& label) const;

  bool operator==(const SimilarityModel& other) const;
};

double sigmoid(double logit);
double clamp_logit(double logit);

// Labeled training pairs for the similarity function.
struct PairSet {
  std::vector<std::size_t> window;  // column in the sensor matrix
  std::vector<int> label;           // vocabulary index
  std::vector<double> target;       // 1 for positives
};

// Every positive plus up to negatives_per_positive * |positives| distinct
// negatives per window, drawn with a fixed seed.
PairSet sample_pairs(const std::vector<std::vector<int>>& positives, int vocab_size, int negatives_per_positive,
                     std::uint64_t seed);

// Core trainer over precomputed embeddings (columns).
SimilarityModel train_similarity(const Eigen::MatrixXd& sensor, const std::vector<std::vector<int>>& positives,
                                 const Eigen::MatrixXd& labels, const SimilarityConfig& config);

// Encodes the labeled windows with frozen encoders, then trains.
SimilarityModel train_similarity(const Parameters& params, const Timeline& timeline, const LabelVocabulary& vocab,
                                 const SimilarityConfig& config);

// Fraction of pairs classified correctly at threshold h.
double pair_accuracy(const SimilarityModel& model, const Eigen::MatrixXd& sensor, const Eigen::MatrixXd& labels,
                     const PairSet& pairs, double h);

void write_similarity(std::ostream& out, const SimilarityModel& model);
SimilarityModel read_similarity(std::istream& in);
void save_similarity(const std::filesystem::path& path, const SimilarityModel& model);
SimilarityModel load_similarity(const std::filesystem::path& path);

// Store plus model with per-record sensor projections cached. The referenced
// store and model must outlive the index.
class ScoringIndex {
 public:
  ScoringIndex(const EmbeddingStore& store, const SimilarityModel& model);

  // Label-side state reused across records.
  struct PreparedLabel {
    Eigen::VectorXd label;
    Eigen::VectorXd projection;
  };

  PreparedLabel prepare(const Eigen::VectorXd& label) const;
  double score(std::size_t record, const PreparedLabel& label) const;

  const EmbeddingStore& store() const { return store_; }
  const SimilarityModel& model() const { return model_; }

 private:
  const EmbeddingStore& store_;
  const SimilarityModel& model_;
  Eigen::MatrixXd cache_;  // hidden x records (mlp) or embed_dim x records (cosine)
};

struct MatchResult {
  std::vector<std::int64_t> timestamps;  // ascending
  std::vector<double> scores;
  std::vector<std::size_t> records;
};

// Records inside the intervals with score strictly above h.
MatchResult match_windows(const ScoringIndex& index, const Eigen::VectorXd& label,
                          const std::vector<Interval>& intervals, double h,
                          const std::optional<std::string>& user_id = std::nullopt);

// Top-k labels for one record, by descending score, ties by vocabulary index.
std::vector<std::pair<std::string, double>> predict_labels(const ScoringIndex& index, const LabelVocabulary& vocab,
                                                           const Eigen::MatrixXd& vocab_embeddings,
                                                           std::string_view user_id, std::int64_t timestamp,
                                                           int k);

void check_threshold(double h);

}  // namespace tsqa

#endif  // TSQA_STORE_HPP_
