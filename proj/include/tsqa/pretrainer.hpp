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

#ifndef TSQA_PRETRAINER_HPP_
#define TSQA_PRETRAINER_HPP_

// Partial-context contrastive pretraining of the sensor and label encoders.
//
// For a sample with sensor embedding z and positive label set W, the loss is
//
//   l = -1/|W| * sum_{w in W} log( exp(z.e_w / tau) / sum_{a in D(w)} exp(z.e_a / tau) )
//
// with D(w) = A \ {w} (Exclusive, the default) or D(w) = A
// (IncludePositive). A batch loss is the sum of its sample losses.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsqa/encoders.hpp"
#include "tsqa/timeline.hpp"

namespace tsqa {

enum class DenominatorMode { Exclusive, IncludePositive };

struct TrainConfig {
  double tau = 0.1;
  double learning_rate = 1e-3;
  int epochs = 100;
  int batch_size = 64;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  DenominatorMode denominator = DenominatorMode::Exclusive;
  std::uint64_t seed = 0;

  void validate() const;
  static TrainConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct Batch {
  std::vector<const SensorWindow*> windows;
  std::vector<std::vector<int>> positives;  // vocabulary indices, parallel to windows

  std::size_t size() const { return windows.size(); }
};

// Labeled windows only; labels are mapped through the vocabulary.
Batch make_batch(std::span<const SensorWindow> windows, const LabelVocabulary& vocab);

struct LossReport {
  double value = 0.0;  // sum over samples
  std::vector<double> per_sample;
  double grad_norm = 0.0;  // filled by loss_and_gradient only

  double mean() const { return per_sample.empty() ? 0.0 : value / static_cast<double>(per_sample.size()); }
};

LossReport partial_context_loss(const Parameters& params, const Batch& batch, const TrainConfig& config);
Parameters loss_gradient(const Parameters& params, const Batch& batch, const TrainConfig& config);
LossReport loss_and_gradient(const Parameters& params, const Batch& batch, const TrainConfig& config,
                             Parameters& grad);

// Central differences (f(p + eps) - f(p - eps)) / (2 eps) per coordinate.
using ScalarLoss = std::function<double(std::span<const double>)>;
std::vector<double> finite_difference_gradient(const ScalarLoss& loss, std::span<const double> point, double eps);
Parameters finite_difference_gradient(const Parameters& params, const Batch& batch, const TrainConfig& config,
                                      double eps);

struct TrainResult {
  Parameters params;
  std::vector<double> loss_history;  // mean per-sample loss per epoch
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

TrainResult train(Parameters params, const Timeline& timeline, const LabelVocabulary& vocab,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

// Fraction of labeled windows whose best-scoring vocabulary label (dot
// product, ties to the lower index) is one of the window's labels.
double retrieval_accuracy(const Parameters& params, const Timeline& timeline, const LabelVocabulary& vocab);

// Flattened view helpers.
std::vector<double> flatten(const Parameters& params);
void unflatten(std::span<const double> values, Parameters& params);

// Randomized analytic-vs-numeric gradient comparison.
struct GradcheckCase {
  int embed_dim = 0;
  int vocab_size = 0;
  int batch_size = 0;
  DenominatorMode denominator = DenominatorMode::Exclusive;
  bool normalize = true;
  double max_rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  double max_rel_error = 0.0;
  double seconds = 0.0;
};

// Relative error per coordinate is |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradcheckFloor = 1e-3;

GradcheckReport run_gradcheck(int num_configs, std::uint64_t seed, double eps = 1e-5);

}  // namespace tsqa

#endif  // TSQA_PRETRAINER_HPP_
