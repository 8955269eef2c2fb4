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

#ifndef TSQA_ENCODERS_HPP_
#define TSQA_ENCODERS_HPP_

// Sensor and label encoders mapping windows and label phrases into a shared
// embedding space.
//
// Sensor side: one two-layer perceptron per modality (linear, ReLU, linear),
// outputs concatenated and passed through a linear fusion layer.
// Label side: a token embedding table; a phrase embeds as the mean of its
// token vectors. Both sides are L2-normalized when `normalize` is set.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "tsqa/timeline.hpp"

namespace tsqa {

enum class FeatureMode { RawWindow, Statistical };

struct EncoderConfig {
  int embed_dim = 512;
  // Hidden width per modality. Empty means 64 for every modality; a single
  // entry is broadcast.
  std::vector<int> hidden_widths;
  std::uint64_t seed = 0;
  bool normalize = true;
  FeatureMode feature_mode = FeatureMode::RawWindow;

  std::vector<int> resolved_hidden(const ModalitySchema& schema) const;
  void validate(const ModalitySchema& schema) const;

  static EncoderConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  bool operator==(const EncoderConfig&) const = default;
};

using Embedding = Eigen::VectorXd;

struct ModalityEncoder {
  Eigen::MatrixXd w1;  // hidden x input
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // hidden x hidden
  Eigen::VectorXd b2;
};

// Holds both encoders. A value of this type with identical shapes also serves
// as a gradient accumulator (see zeros_like).
struct Parameters {
  EncoderConfig config;
  ModalitySchema schema;
  LabelVocabulary vocabulary;
  std::vector<int> hidden_widths;

  std::vector<ModalityEncoder> modalities;
  Eigen::MatrixXd fusion_w;  // embed_dim x sum(hidden)
  Eigen::VectorXd fusion_b;
  std::vector<std::string> tokens;  // sorted
  Eigen::MatrixXd token_table;      // embed_dim x tokens.size()

  int embed_dim() const { return config.embed_dim; }
  int token_index(std::string_view token) const;  // -1 when absent

  // Every trainable tensor, in declaration order: per modality (w1, b1, w2,
  // b2), then fusion_w, fusion_b, token_table.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::size_t parameter_count() const;
};

Parameters init_parameters(const EncoderConfig& config, const ModalitySchema& schema,
                           const LabelVocabulary& vocab);
Parameters zeros_like(const Parameters& params);

int modality_input_dim(FeatureMode mode, const Modality& modality);

// Per modality: mean, population standard deviation, min, max.
Eigen::VectorXd statistical_features(const SensorWindow& window);
Eigen::VectorXd modality_input(const Parameters& params, const SensorWindow& window, std::size_t modality);

Embedding encode_sensor(const Parameters& params, const SensorWindow& window);
Embedding encode_label(const Parameters& params, std::string_view phrase);
// One column per vocabulary phrase, in vocabulary order.
Eigen::MatrixXd encode_vocabulary(const Parameters& params);

void write_parameters(std::ostream& out, const Parameters& params);
Parameters read_parameters(std::istream& in);
void save_parameters(const std::filesystem::path& path, const Parameters& params);
Parameters load_parameters(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Batched forward/backward passes. Columns are samples.

using ModalityInputs = std::vector<Eigen::MatrixXd>;  // per modality: input_dim x batch

ModalityInputs gather_inputs(const Parameters& params, std::span<const SensorWindow* const> windows);

struct SensorActivations {
  std::vector<Eigen::MatrixXd> pre_hidden;  // w1 x + b1
  std::vector<Eigen::MatrixXd> hidden;      // relu(pre_hidden)
  Eigen::MatrixXd concat;                   // stacked modality outputs
  Eigen::MatrixXd fused;                    // fusion_w concat + fusion_b
  Eigen::MatrixXd embedding;                // fused, normalized if configured
  Eigen::VectorXd norms;                    // column norms of fused
};

SensorActivations forward_sensor(const Parameters& params, const ModalityInputs& inputs);
// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(embedding).
void backward_sensor(const Parameters& params, const ModalityInputs& inputs, const SensorActivations& acts,
                     const Eigen::MatrixXd& d_embedding, Parameters& grad);

struct LabelActivations {
  std::vector<std::vector<int>> token_ids;
  Eigen::MatrixXd mean;       // mean token vector per phrase
  Eigen::MatrixXd embedding;  // normalized if configured
  Eigen::VectorXd norms;
};

LabelActivations forward_labels(const Parameters& params, std::span<const std::string> phrases);
void backward_labels(const Parameters& params, const LabelActivations& acts, const Eigen::MatrixXd& d_embedding,
                     Parameters& grad);

}  // namespace tsqa

#endif  // TSQA_ENCODERS_HPP_
