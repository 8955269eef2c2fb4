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

#include "tsqa/pretrainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "tsqa/error.hpp"

namespace tsqa {
namespace {

// Uniform integer in [0, n) without the implementation-defined
// std::uniform_int_distribution, so shuffles reproduce across toolchains.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double gaussian(std::mt19937_64& rng) {
  double u1 = unit(rng);
  while (u1 <= 0.0) u1 = unit(rng);
  const double u2 = unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void check_batch(const Parameters& params, const Batch& batch) {
  if (params.vocabulary.size() < 2) {
    throw Error(ErrorCode::kVocabulary, "contrastive loss needs a vocabulary of at least 2 phrases");
  }
  if (batch.windows.size() != batch.positives.size()) {
    throw Error(ErrorCode::kPrecondition, "batch windows and positives differ in length");
  }
  for (const std::vector<int>& pos : batch.positives) {
    if (pos.empty()) throw Error(ErrorCode::kPrecondition, "every sample needs at least one positive label");
    for (int a : pos) {
      if (a < 0 || a >= static_cast<int>(params.vocabulary.size())) {
        throw Error(ErrorCode::kPrecondition, "positive label index out of range");
      }
    }
  }
}

void reset_gradient(const Parameters& params, Parameters& grad) {
  std::vector<std::span<const double>> want = params.tensors();
  std::vector<std::span<double>> have = grad.tensors();
  bool same = want.size() == have.size();
  for (std::size_t i = 0; same && i < want.size(); ++i) same = want[i].size() == have[i].size();
  if (!same) {
    grad = zeros_like(params);
    return;
  }
  for (std::span<double> t : have) std::fill(t.begin(), t.end(), 0.0);
}

// Loss (and optionally gradient) over precomputed encoder inputs.
LossReport evaluate(const Parameters& params, const ModalityInputs& inputs,
                    std::span<const std::vector<int>> positives, const TrainConfig& config, Parameters* grad) {
  const SensorActivations sensor = forward_sensor(params, inputs);
  const LabelActivations labels = forward_labels(params, params.vocabulary.phrases());
  const Eigen::MatrixXd logits = sensor.embedding.transpose() * labels.embedding / config.tau;  // batch x |A|

  const Eigen::Index batch = logits.rows();
  const Eigen::Index n_labels = logits.cols();
  const bool exclusive = config.denominator == DenominatorMode::Exclusive;
  Eigen::MatrixXd d_logits;
  if (grad) d_logits = Eigen::MatrixXd::Zero(batch, n_labels);

  LossReport report;
  report.per_sample.resize(static_cast<std::size_t>(batch));
  std::vector<double> weights(static_cast<std::size_t>(n_labels));
  for (Eigen::Index t = 0; t < batch; ++t) {
    const std::vector<int>& pos = positives[static_cast<std::size_t>(t)];
    const double inv_k = 1.0 / static_cast<double>(pos.size());
    double sample_loss = 0.0;
    for (int w : pos) {
      double peak = -std::numeric_limits<double>::infinity();
      for (Eigen::Index a = 0; a < n_labels; ++a) {
        if (exclusive && a == w) continue;
        peak = std::max(peak, logits(t, a));
      }
      double sum = 0.0;
      for (Eigen::Index a = 0; a < n_labels; ++a) {
        if (exclusive && a == w) {
          weights[static_cast<std::size_t>(a)] = 0.0;
          continue;
        }
        weights[static_cast<std::size_t>(a)] = std::exp(logits(t, a) - peak);
        sum += weights[static_cast<std::size_t>(a)];
      }
      const double log_denominator = peak + std::log(sum);
      sample_loss -= inv_k * (logits(t, w) - log_denominator);
      if (grad) {
        d_logits(t, w) -= inv_k;
        for (Eigen::Index a = 0; a < n_labels; ++a) {
          d_logits(t, a) += inv_k * weights[static_cast<std::size_t>(a)] / sum;
        }
      }
    }
    report.per_sample[static_cast<std::size_t>(t)] = sample_loss;
    report.value += sample_loss;
  }

  if (grad) {
    reset_gradient(params, *grad);
    const Eigen::MatrixXd d_sensor = labels.embedding * d_logits.transpose() / config.tau;
    const Eigen::MatrixXd d_labels = sensor.embedding * d_logits / config.tau;
    backward_sensor(params, inputs, sensor, d_sensor, *grad);
    backward_labels(params, labels, d_labels, *grad);
    double sq = 0.0;
    for (std::span<const double> g : std::as_const(*grad).tensors()) {
      for (double x : g) sq += x * x;
    }
    report.grad_norm = std::sqrt(sq);
  }
  return report;
}

LossReport evaluate_batch(const Parameters& params, const Batch& batch, const TrainConfig& config,
                          Parameters* grad) {
  check_batch(params, batch);
  if (config.tau <= 0.0) throw Error(ErrorCode::kPrecondition, "tau must be > 0");
  const ModalityInputs inputs = gather_inputs(params, batch.windows);
  return evaluate(params, inputs, batch.positives, config, grad);
}

ModalityInputs slice_columns(const ModalityInputs& all, std::span<const std::size_t> cols) {
  ModalityInputs out(all.size());
  for (std::size_t m = 0; m < all.size(); ++m) {
    out[m].resize(all[m].rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) {
      out[m].col(static_cast<Eigen::Index>(i)) = all[m].col(static_cast<Eigen::Index>(cols[i]));
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// TrainConfig

void TrainConfig::validate() const {
  if (!(tau > 0.0)) throw Error(ErrorCode::kPrecondition, "tau must be > 0");
  if (epochs < 1) throw Error(ErrorCode::kPrecondition, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::kPrecondition, "batch_size must be >= 1");
  if (learning_rate < 0.0) throw Error(ErrorCode::kPrecondition, "learning_rate must be >= 0");
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.tau = j.value("tau", c.tau);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.seed = j.value("seed", c.seed);
  std::string mode = j.value("denominator_mode", std::string("exclusive"));
  if (mode == "exclusive") {
    c.denominator = DenominatorMode::Exclusive;
  } else if (mode == "include_positive") {
    c.denominator = DenominatorMode::IncludePositive;
  } else {
    throw Error(ErrorCode::kConfiguration, "unknown denominator_mode '" + mode + "'");
  }
  c.validate();
  return c;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"tau", tau},
          {"learning_rate", learning_rate},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"beta1", beta1},
          {"beta2", beta2},
          {"adam_epsilon", adam_epsilon},
          {"seed", seed},
          {"denominator_mode",
           denominator == DenominatorMode::Exclusive ? "exclusive" : "include_positive"}};
}

// ---------------------------------------------------------------------------
// Loss and gradient

Batch make_batch(std::span<const SensorWindow> windows, const LabelVocabulary& vocab) {
  Batch batch;
  for (const SensorWindow& w : windows) {
    std::vector<int> pos;
    for (const std::string& l : w.labels) {
      auto idx = vocab.index_of(l);
      if (!idx) throw Error(ErrorCode::kVocabulary, "label '" + l + "' is not in the vocabulary");
      pos.push_back(*idx);
    }
    if (pos.empty()) continue;
    batch.windows.push_back(&w);
    batch.positives.push_back(std::move(pos));
  }
  return batch;
}

LossReport partial_context_loss(const Parameters& params, const Batch& batch, const TrainConfig& config) {
  return evaluate_batch(params, batch, config, nullptr);
}

LossReport loss_and_gradient(const Parameters& params, const Batch& batch, const TrainConfig& config,
                             Parameters& grad) {
  return evaluate_batch(params, batch, config, &grad);
}

Parameters loss_gradient(const Parameters& params, const Batch& batch, const TrainConfig& config) {
  Parameters grad = zeros_like(params);
  loss_and_gradient(params, batch, config, grad);
  return grad;
}

std::vector<double> flatten(const Parameters& params) {
  std::vector<double> out;
  out.reserve(params.parameter_count());
  for (std::span<const double> t : params.tensors()) out.insert(out.end(), t.begin(), t.end());
  return out;
}

void unflatten(std::span<const double> values, Parameters& params) {
  if (values.size() != params.parameter_count()) {
    throw Error(ErrorCode::kPrecondition, "flat parameter vector has the wrong length");
  }
  std::size_t offset = 0;
  for (std::span<double> t : params.tensors()) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), t.size(), t.begin());
    offset += t.size();
  }
}

std::vector<double> finite_difference_gradient(const ScalarLoss& loss, std::span<const double> point, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kPrecondition, "finite-difference step must be > 0");
  std::vector<double> p(point.begin(), point.end());
  std::vector<double> grad(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + eps;
    const double up = loss(p);
    p[i] = orig - eps;
    const double down = loss(p);
    p[i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

Parameters finite_difference_gradient(const Parameters& params, const Batch& batch, const TrainConfig& config,
                                      double eps) {
  check_batch(params, batch);
  const ModalityInputs inputs = gather_inputs(params, batch.windows);
  Parameters probe = params;
  auto loss = [&](std::span<const double> flat) {
    unflatten(flat, probe);
    return evaluate(probe, inputs, batch.positives, config, nullptr).value;
  };
  std::vector<double> g = finite_difference_gradient(loss, flatten(params), eps);
  Parameters grad = zeros_like(params);
  unflatten(g, grad);
  return grad;
}

// ---------------------------------------------------------------------------
// Training

TrainResult train(Parameters params, const Timeline& timeline, const LabelVocabulary& vocab,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (!(params.vocabulary == vocab)) {
    throw Error(ErrorCode::kVocabulary, "parameters were initialized for a different vocabulary");
  }
  const Batch all = make_batch(timeline.windows, vocab);
  if (all.size() == 0) throw Error(ErrorCode::kTrainingData, "timeline has no labeled windows");
  check_batch(params, all);
  const ModalityInputs inputs = gather_inputs(params, all.windows);

  std::vector<std::span<double>> tensors = params.tensors();
  std::vector<std::vector<double>> m1(tensors.size());
  std::vector<std::vector<double>> m2(tensors.size());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    m1[i].assign(tensors[i].size(), 0.0);
    m2[i].assign(tensors[i].size(), 0.0);
  }

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Parameters grad = zeros_like(params);
  std::vector<std::vector<int>> batch_pos;
  std::int64_t step = 0;

  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[bounded(rng, i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::span<const std::size_t> cols(order.data() + start, end - start);
      batch_pos.clear();
      for (std::size_t c : cols) batch_pos.push_back(all.positives[c]);
      const LossReport rep = evaluate(params, slice_columns(inputs, cols), batch_pos, config, &grad);
      epoch_loss += rep.value;

      ++step;
      const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      std::vector<std::span<double>> g = grad.tensors();
      for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
        for (std::size_t k = 0; k < tensors[ti].size(); ++k) {
          const double gk = g[ti][k];
          m1[ti][k] = config.beta1 * m1[ti][k] + (1.0 - config.beta1) * gk;
          m2[ti][k] = config.beta2 * m2[ti][k] + (1.0 - config.beta2) * gk * gk;
          const double mhat = m1[ti][k] / bc1;
          const double vhat = m2[ti][k] / bc2;
          tensors[ti][k] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_epsilon);
        }
      }
    }
    const double mean = epoch_loss / static_cast<double>(all.size());
    result.loss_history.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  result.params = std::move(params);
  return result;
}

double retrieval_accuracy(const Parameters& params, const Timeline& timeline, const LabelVocabulary& vocab) {
  const Batch all = make_batch(timeline.windows, vocab);
  if (all.size() == 0) return 0.0;
  const Eigen::MatrixXd labels = forward_labels(params, vocab.phrases()).embedding;
  constexpr std::size_t kChunk = 512;
  std::size_t hits = 0;
  for (std::size_t start = 0; start < all.size(); start += kChunk) {
    const std::size_t end = std::min(all.size(), start + kChunk);
    std::span<const SensorWindow* const> chunk(all.windows.data() + start, end - start);
    const Eigen::MatrixXd scores = forward_sensor(params, gather_inputs(params, chunk)).embedding.transpose() * labels;
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      Eigen::Index best = 0;
      for (Eigen::Index a = 1; a < scores.cols(); ++a) {
        if (scores(r, a) > scores(r, best)) best = a;
      }
      const std::vector<int>& pos = all.positives[start + static_cast<std::size_t>(r)];
      if (std::find(pos.begin(), pos.end(), static_cast<int>(best)) != pos.end()) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(all.size());
}

// ---------------------------------------------------------------------------
// Gradient check

GradcheckReport run_gradcheck(int num_configs, std::uint64_t seed, double eps) {
  static const std::vector<std::string> kWords = {"sit", "walk", "home", "run",   "cook", "eat",
                                                  "at",  "work", "car", "sleep", "talk", "school"};
  const auto started = std::chrono::steady_clock::now();
  GradcheckReport report;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < num_configs; ++i) {
    GradcheckCase c;
    c.embed_dim = (i & 1) ? 8 : 4;
    c.vocab_size = (i & 2) ? 10 : 3;
    c.denominator = (i & 4) ? DenominatorMode::IncludePositive : DenominatorMode::Exclusive;
    c.normalize = (i & 8) == 0;
    c.batch_size = 1 + static_cast<int>(bounded(rng, 16));

    std::set<std::string> phrases;
    while (static_cast<int>(phrases.size()) < c.vocab_size) {
      const int n_tok = 1 + static_cast<int>(bounded(rng, 3));
      std::string p;
      for (int k = 0; k < n_tok; ++k) p += (k ? " " : "") + kWords[bounded(rng, kWords.size())];
      phrases.insert(p);
    }
    LabelVocabulary vocab(std::vector<std::string>(phrases.begin(), phrases.end()));

    std::vector<Modality> mods = {{"imu", 1 + static_cast<int>(bounded(rng, 4))},
                                  {"audio", 1 + static_cast<int>(bounded(rng, 4))}};
    ModalitySchema schema(mods);
    EncoderConfig enc;
    enc.embed_dim = c.embed_dim;
    enc.hidden_widths = {2 + static_cast<int>(bounded(rng, 4)), 2 + static_cast<int>(bounded(rng, 4))};
    enc.seed = rng();
    enc.normalize = c.normalize;
    enc.feature_mode = bounded(rng, 4) == 0 ? FeatureMode::Statistical : FeatureMode::RawWindow;
    Parameters params = init_parameters(enc, schema, vocab);
    for (ModalityEncoder& m : params.modalities) {
      for (Eigen::Index k = 0; k < m.b1.size(); ++k) m.b1(k) = 0.2 * gaussian(rng);
      for (Eigen::Index k = 0; k < m.b2.size(); ++k) m.b2(k) = 0.2 * gaussian(rng);
    }

    std::vector<SensorWindow> windows(static_cast<std::size_t>(c.batch_size));
    Batch batch;
    for (SensorWindow& w : windows) {
      for (const Modality& m : mods) {
        std::vector<double> v(static_cast<std::size_t>(m.dim));
        for (double& x : v) x = gaussian(rng);
        w.features.push_back(std::move(v));
      }
      w.missing.assign(mods.size(), false);
      const int k = 1 + static_cast<int>(bounded(rng, std::min<std::uint64_t>(3, vocab.size())));
      std::set<int> pos;
      while (static_cast<int>(pos.size()) < k) pos.insert(static_cast<int>(bounded(rng, vocab.size())));
      batch.windows.push_back(&w);
      batch.positives.emplace_back(pos.begin(), pos.end());
    }

    TrainConfig tc;
    static const double kTaus[] = {0.1, 0.5, 1.0};
    tc.tau = kTaus[bounded(rng, 3)];
    tc.denominator = c.denominator;

    const std::vector<double> analytic = flatten(loss_gradient(params, batch, tc));
    const std::vector<double> numeric = flatten(finite_difference_gradient(params, batch, tc, eps));
    for (std::size_t k = 0; k < analytic.size(); ++k) {
      const double denom = std::max({std::abs(analytic[k]), std::abs(numeric[k]), kGradcheckFloor});
      c.max_rel_error = std::max(c.max_rel_error, std::abs(analytic[k] - numeric[k]) / denom);
    }
    report.max_rel_error = std::max(report.max_rel_error, c.max_rel_error);
    report.cases.push_back(c);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace tsqa
