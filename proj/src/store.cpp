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

#include "tsqa/store.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tsqa/binary_io.hpp"
#include "tsqa/error.hpp"
#include "tsqa/pretrainer.hpp"

namespace tsqa {
namespace {

constexpr std::string_view kStoreMagic = "SCEM";
constexpr std::uint32_t kStoreVersion = 1;
constexpr std::string_view kSimilarityMagic = "SCFS";
constexpr std::uint32_t kSimilarityVersion = 1;
constexpr double kLogitClamp = 30.0;
constexpr std::size_t kEncodeChunk = 256;

double uniform_symmetric(std::mt19937_64& rng, double s) {
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return (2.0 * u - 1.0) * s;
}

std::size_t bounded(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

void round_to_float(Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
}
void round_to_float(Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = static_cast<double>(static_cast<float>(v[i]));
}

double logit_raw(const SimilarityModel& m, const double* sensor_proj, const double* label_proj) {
  if (m.mode == SimilarityMode::CosineSigmoid) {
    double dot = 0.0;
    for (int k = 0; k < m.embed_dim; ++k) dot += sensor_proj[k] * label_proj[k];
    return m.scale * dot;
  }
  double acc = m.b2;
  const int hidden = m.hidden();
  for (int k = 0; k < hidden; ++k) acc += m.w2[k] * std::max(0.0, sensor_proj[k] + label_proj[k]);
  return acc;
}

const char* mode_name(SimilarityMode m) { return m == SimilarityMode::Mlp ? "mlp" : "cosine_sigmoid"; }

// Binary cross-entropy of one prediction, computed from the logit.
double bce_from_logit(double logit, double target) {
  // log(1 + e^x) - y x, stable for both signs
  const double softplus = logit > 0 ? logit + std::log1p(std::exp(-logit)) : std::log1p(std::exp(logit));
  return softplus - target * logit;
}

struct AdamState {
  std::vector<Eigen::MatrixXd> m;
  std::vector<Eigen::MatrixXd> v;
};

}  // namespace

// ---------------------------------------------------------------------------
// Store

void EmbeddingStore::append(std::int64_t timestamp, std::string_view user_id, std::span<const float> vector) {
  if (static_cast<int>(vector.size()) != embed_dim_) {
    throw Error(ErrorCode::kPrecondition, "embedding has dimension " + std::to_string(vector.size()) +
                                              ", store expects " + std::to_string(embed_dim_));
  }
  index_.append(user_id, timestamp);
  data_.insert(data_.end(), vector.begin(), vector.end());
}

Embedding EmbeddingStore::embedding(std::size_t record) const {
  std::span<const float> v = vector(record);
  Embedding out(embed_dim_);
  for (int k = 0; k < embed_dim_; ++k) out[k] = static_cast<double>(v[static_cast<std::size_t>(k)]);
  return out;
}

EmbeddingRecord EmbeddingStore::record(std::size_t i) const {
  std::span<const float> v = vector(i);
  return {index_.timestamp(i), index_.user_id(i), std::vector<float>(v.begin(), v.end())};
}

bool EmbeddingStore::operator==(const EmbeddingStore& other) const {
  if (embed_dim_ != other.embed_dim_ || size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (index_.timestamp(i) != other.index_.timestamp(i) || index_.user_id(i) != other.index_.user_id(i)) {
      return false;
    }
  }
  return std::equal(data_.begin(), data_.end(), other.data_.begin(), [](float a, float b) {
    return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b);
  });
}

EmbeddingStore build_store(const Parameters& params, const Timeline& timeline) {
  if (!(params.schema == timeline.schema)) {
    throw Error(ErrorCode::kSchema, "timeline schema does not match the encoder schema");
  }
  const int dim = params.embed_dim();
  EmbeddingStore store(dim);
  std::vector<const SensorWindow*> chunk;
  std::vector<float> row(static_cast<std::size_t>(dim));
  for (std::size_t start = 0; start < timeline.windows.size(); start += kEncodeChunk) {
    const std::size_t stop = std::min(timeline.windows.size(), start + kEncodeChunk);
    chunk.clear();
    for (std::size_t i = start; i < stop; ++i) chunk.push_back(&timeline.windows[i]);
    SensorActivations acts = forward_sensor(params, gather_inputs(params, chunk));
    for (std::size_t j = 0; j < chunk.size(); ++j) {
      for (int k = 0; k < dim; ++k) row[static_cast<std::size_t>(k)] = static_cast<float>(acts.embedding(k, j));
      store.append(chunk[j]->timestamp, chunk[j]->user_id, row);
    }
  }
  return store;
}

void write_store(std::ostream& out, const EmbeddingStore& store) {
  io::BinaryWriter w(out);
  w.magic(kStoreMagic);
  w.u32(kStoreVersion);
  w.u32(static_cast<std::uint32_t>(store.embed_dim()));
  w.u64(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    w.i64(store.index().timestamp(i));
    w.short_string(store.index().user_id(i));
    for (float x : store.vector(i)) w.f32(x);
  }
  w.check();
}

EmbeddingStore read_store(std::istream& in) {
  io::BinaryReader r(in);
  r.expect_magic(kStoreMagic);
  const std::uint32_t version = r.u32();
  if (version != kStoreVersion) throw Error(ErrorCode::kFormat, "unsupported store version " + std::to_string(version));
  const int dim = static_cast<int>(r.u32());
  const std::uint64_t count = r.u64();
  EmbeddingStore store(dim);
  std::vector<float> row(static_cast<std::size_t>(dim));
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::int64_t ts = r.i64();
    const std::string user = r.short_string();
    for (float& x : row) x = r.f32();
    store.append(ts, user, row);
  }
  if (!r.at_end()) throw Error(ErrorCode::kFormat, "trailing bytes after store records");
  return store;
}

void save_store(const std::filesystem::path& path, const EmbeddingStore& store) {
  io::write_atomically(path, [&](std::ostream& out) { write_store(out, store); });
}

EmbeddingStore load_store(const std::filesystem::path& path) {
  std::ifstream in = io::open_binary(path);
  return read_store(in);
}

// ---------------------------------------------------------------------------
// Similarity model

void SimilarityConfig::validate() const {
  if (hidden <= 0) throw Error(ErrorCode::kConfiguration, "similarity hidden width must be positive");
  if (epochs < 0) throw Error(ErrorCode::kConfiguration, "similarity epochs must be non-negative");
  if (batch_size <= 0) throw Error(ErrorCode::kConfiguration, "similarity batch size must be positive");
  if (!(learning_rate >= 0.0)) throw Error(ErrorCode::kConfiguration, "similarity learning rate must be >= 0");
  if (negatives_per_positive < 0) throw Error(ErrorCode::kConfiguration, "negatives_per_positive must be >= 0");
  check_threshold(threshold);
}

SimilarityConfig SimilarityConfig::from_json(const nlohmann::json& j) {
  SimilarityConfig c;
  const std::string mode = j.value("mode", std::string("mlp"));
  if (mode == "mlp") {
    c.mode = SimilarityMode::Mlp;
  } else if (mode == "cosine_sigmoid") {
    c.mode = SimilarityMode::CosineSigmoid;
  } else {
    throw Error(ErrorCode::kConfiguration, "unknown similarity mode '" + mode + "'");
  }
  c.hidden = j.value("hidden", c.hidden);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.negatives_per_positive = j.value("negatives_per_positive", c.negatives_per_positive);
  c.threshold = j.value("threshold", c.threshold);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

nlohmann::json SimilarityConfig::to_json() const {
  return {{"mode", mode_name(mode)},
          {"hidden", hidden},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"negatives_per_positive", negatives_per_positive},
          {"threshold", threshold},
          {"seed", seed}};
}

double sigmoid(double logit) { return 1.0 / (1.0 + std::exp(-clamp_logit(logit))); }

double clamp_logit(double logit) { return std::clamp(logit, -kLogitClamp, kLogitClamp); }

void check_threshold(double h) {
  if (!(h > 0.0 && h < 1.0)) throw Error(ErrorCode::kPrecondition, "threshold h must lie in (0, 1)");
}

SimilarityModel SimilarityModel::cosine(int embed_dim, double scale) {
  SimilarityModel m;
  m.mode = SimilarityMode::CosineSigmoid;
  m.embed_dim = embed_dim;
  m.scale = scale;
  return m;
}

Eigen::VectorXd SimilarityModel::project_sensor(const Eigen::VectorXd& sensor) const {
  if (sensor.size() != embed_dim) throw Error(ErrorCode::kPrecondition, "sensor embedding dimension mismatch");
  if (mode == SimilarityMode::CosineSigmoid) return sensor;
  Eigen::VectorXd out = w1.leftCols(embed_dim) * sensor;
  return out;
}

Eigen::VectorXd SimilarityModel::project_label(const Eigen::VectorXd& label) const {
  if (label.size() != embed_dim) throw Error(ErrorCode::kPrecondition, "label embedding dimension mismatch");
  if (mode == SimilarityMode::CosineSigmoid) return label;
  Eigen::VectorXd out = w1.rightCols(embed_dim) * label + b1;
  return out;
}

double SimilarityModel::logit_from_projections(const Eigen::VectorXd& sensor_proj,
                                               const Eigen::VectorXd& label_proj) const {
  return logit_raw(*this, sensor_proj.data(), label_proj.data());
}

double SimilarityModel::logit(const Eigen::VectorXd& sensor, const Eigen::VectorXd& label) const {
  return logit_from_projections(project_sensor(sensor), project_label(label));
}

double SimilarityModel::score(const Eigen::VectorXd& sensor, const Eigen::VectorXd& label) const {
  return sigmoid(logit(sensor, label));
}

bool SimilarityModel::operator==(const SimilarityModel& o) const {
  if (mode != o.mode || embed_dim != o.embed_dim) return false;
  if (mode == SimilarityMode::CosineSigmoid) return scale == o.scale;
  return w1.rows() == o.w1.rows() && w1.cols() == o.w1.cols() && w1 == o.w1 && b1 == o.b1 && w2 == o.w2 &&
         b2 == o.b2;
}

PairSet sample_pairs(const std::vector<std::vector<int>>& positives, int vocab_size, int negatives_per_positive,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PairSet pairs;
  std::vector<int> pool;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    for (int a : positives[i]) {
      pairs.window.push_back(i);
      pairs.label.push_back(a);
      pairs.target.push_back(1.0);
    }
    pool.clear();
    for (int a = 0; a < vocab_size; ++a) {
      if (std::find(positives[i].begin(), positives[i].end(), a) == positives[i].end()) pool.push_back(a);
    }
    const std::size_t want =
        std::min(pool.size(), static_cast<std::size_t>(negatives_per_positive) * positives[i].size());
    // partial Fisher-Yates
    for (std::size_t k = 0; k < want; ++k) {
      std::swap(pool[k], pool[k + bounded(rng, pool.size() - k)]);
      pairs.window.push_back(i);
      pairs.label.push_back(pool[k]);
      pairs.target.push_back(0.0);
    }
  }
  return pairs;
}

double pair_accuracy(const SimilarityModel& model, const Eigen::MatrixXd& sensor, const Eigen::MatrixXd& labels,
                     const PairSet& pairs, double h) {
  if (pairs.target.empty()) return 0.0;
  std::vector<Eigen::VectorXd> sp(static_cast<std::size_t>(sensor.cols()));
  std::vector<Eigen::VectorXd> lp(static_cast<std::size_t>(labels.cols()));
  for (Eigen::Index i = 0; i < sensor.cols(); ++i) sp[static_cast<std::size_t>(i)] = model.project_sensor(sensor.col(i));
  for (Eigen::Index a = 0; a < labels.cols(); ++a) lp[static_cast<std::size_t>(a)] = model.project_label(labels.col(a));
  std::size_t correct = 0;
  for (std::size_t p = 0; p < pairs.target.size(); ++p) {
    const double s = sigmoid(model.logit_from_projections(sp[pairs.window[p]], lp[static_cast<std::size_t>(pairs.label[p])]));
    if ((s > h) == (pairs.target[p] > 0.5)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.target.size());
}

namespace {

SimilarityModel fit_cosine(const Eigen::MatrixXd& sensor, const Eigen::MatrixXd& labels, const PairSet& pairs,
                           const SimilarityConfig& config) {
  SimilarityModel best;
  double best_acc = -1.0;
  double best_bce = 0.0;
  for (double c : kCosineScaleGrid) {
    SimilarityModel m = SimilarityModel::cosine(static_cast<int>(sensor.rows()), c);
    double bce = 0.0;
    for (std::size_t p = 0; p < pairs.target.size(); ++p) {
      bce += bce_from_logit(clamp_logit(m.logit(sensor.col(static_cast<Eigen::Index>(pairs.window[p])),
                                                labels.col(pairs.label[p]))),
                            pairs.target[p]);
    }
    const double acc = pair_accuracy(m, sensor, labels, pairs, config.threshold);
    if (acc > best_acc || (acc == best_acc && bce < best_bce)) {
      best = m;
      best_acc = acc;
      best_bce = bce;
    }
  }
  return best;
}

SimilarityModel fit_mlp(const Eigen::MatrixXd& sensor, const std::vector<std::vector<int>>& positives,
                        const Eigen::MatrixXd& labels, const PairSet& pairs, const SimilarityConfig& config) {
  const int dim = static_cast<int>(sensor.rows());
  const int hidden = config.hidden;
  std::mt19937_64 rng(config.seed);
  SimilarityModel m;
  m.mode = SimilarityMode::Mlp;
  m.embed_dim = dim;
  const double s1 = std::sqrt(6.0 / static_cast<double>(2 * dim + hidden));
  const double s2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  m.w1.resize(hidden, 2 * dim);
  for (Eigen::Index i = 0; i < m.w1.size(); ++i) m.w1.data()[i] = uniform_symmetric(rng, s1);
  m.b1 = Eigen::VectorXd::Zero(hidden);
  m.w2.resize(hidden);
  for (int i = 0; i < hidden; ++i) m.w2[i] = uniform_symmetric(rng, s2);
  m.b2 = 0.0;

  // pairs grouped per window so each sensor projection is computed once per step
  std::vector<std::vector<std::size_t>> by_window(positives.size());
  for (std::size_t p = 0; p < pairs.window.size(); ++p) by_window[pairs.window[p]].push_back(p);
  std::vector<std::size_t> order(positives.size());
  std::iota(order.begin(), order.end(), 0);

  // Adam over (w1, b1, w2, b2)
  Eigen::MatrixXd mw1 = Eigen::MatrixXd::Zero(hidden, 2 * dim), vw1 = mw1;
  Eigen::VectorXd mb1 = Eigen::VectorXd::Zero(hidden), vb1 = mb1, mw2 = mb1, vw2 = mb1;
  double mb2 = 0.0, vb2 = 0.0;
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[bounded(rng, i)]);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t stop = std::min(order.size(), start + bs);
      const Eigen::Index cols = static_cast<Eigen::Index>(stop - start);
      Eigen::MatrixXd xs(dim, cols);
      std::size_t npairs = 0;
      for (std::size_t b = start; b < stop; ++b) {
        xs.col(static_cast<Eigen::Index>(b - start)) = sensor.col(static_cast<Eigen::Index>(order[b]));
        npairs += by_window[order[b]].size();
      }
      if (npairs == 0) continue;
      const Eigen::MatrixXd ps = m.w1.leftCols(dim) * xs;
      const Eigen::MatrixXd pl = (m.w1.rightCols(dim) * labels).colwise() + m.b1;
      Eigen::MatrixXd dps = Eigen::MatrixXd::Zero(hidden, cols);
      Eigen::MatrixXd dpl = Eigen::MatrixXd::Zero(hidden, labels.cols());
      Eigen::VectorXd dw2 = Eigen::VectorXd::Zero(hidden);
      double db2 = 0.0;
      Eigen::VectorXd pre(hidden);
      for (std::size_t b = start; b < stop; ++b) {
        const Eigen::Index c = static_cast<Eigen::Index>(b - start);
        for (std::size_t p : by_window[order[b]]) {
          const int a = pairs.label[p];
          pre = ps.col(c) + pl.col(a);
          double logit = m.b2;
          for (int k = 0; k < hidden; ++k) logit += m.w2[k] * std::max(0.0, pre[k]);
          const double g = (1.0 / (1.0 + std::exp(-logit)) - pairs.target[p]) / static_cast<double>(npairs);
          db2 += g;
          for (int k = 0; k < hidden; ++k) {
            if (pre[k] <= 0.0) continue;
            dw2[k] += g * pre[k];
            const double d = g * m.w2[k];
            dps(k, c) += d;
            dpl(k, a) += d;
          }
        }
      }
      Eigen::MatrixXd dw1(hidden, 2 * dim);
      dw1.leftCols(dim).noalias() = dps * xs.transpose();
      dw1.rightCols(dim).noalias() = dpl * labels.transpose();
      const Eigen::VectorXd db1 = dpl.rowwise().sum();

      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      const double lr = config.learning_rate;
      auto update = [&](auto& param, auto& mom, auto& vel, const auto& grad) {
        mom = beta1 * mom + (1.0 - beta1) * grad;
        vel = beta2 * vel + (1.0 - beta2) * grad.cwiseProduct(grad);
        param.array() -= lr * (mom.array() / c1) / ((vel.array() / c2).sqrt() + eps);
      };
      update(m.w1, mw1, vw1, dw1);
      update(m.b1, mb1, vb1, db1);
      update(m.w2, mw2, vw2, dw2);
      mb2 = beta1 * mb2 + (1.0 - beta1) * db2;
      vb2 = beta2 * vb2 + (1.0 - beta2) * db2 * db2;
      m.b2 -= lr * (mb2 / c1) / (std::sqrt(vb2 / c2) + eps);
    }
  }
  // persisted as f32; keep the in-memory model identical to a reloaded one
  round_to_float(m.w1);
  round_to_float(m.b1);
  round_to_float(m.w2);
  m.b2 = static_cast<double>(static_cast<float>(m.b2));
  return m;
}

}  // namespace

SimilarityModel train_similarity(const Eigen::MatrixXd& sensor, const std::vector<std::vector<int>>& positives,
                                 const Eigen::MatrixXd& labels, const SimilarityConfig& config) {
  config.validate();
  if (positives.empty() || static_cast<std::size_t>(sensor.cols()) != positives.size()) {
    throw Error(ErrorCode::kTrainingData, "similarity training needs labeled windows");
  }
  if (sensor.rows() != labels.rows()) throw Error(ErrorCode::kPrecondition, "embedding dimension mismatch");
  const PairSet pairs =
      sample_pairs(positives, static_cast<int>(labels.cols()), config.negatives_per_positive, config.seed);
  if (config.mode == SimilarityMode::CosineSigmoid) return fit_cosine(sensor, labels, pairs, config);
  return fit_mlp(sensor, positives, labels, pairs, config);
}

SimilarityModel train_similarity(const Parameters& params, const Timeline& timeline, const LabelVocabulary& vocab,
                                 const SimilarityConfig& config) {
  const Batch batch = make_batch(timeline.windows, vocab);
  if (batch.size() == 0) throw Error(ErrorCode::kTrainingData, "no labeled windows for similarity training");
  Eigen::MatrixXd sensor(params.embed_dim(), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t start = 0; start < batch.size(); start += kEncodeChunk) {
    const std::size_t stop = std::min(batch.size(), start + kEncodeChunk);
    std::span<const SensorWindow* const> chunk(batch.windows.data() + start, stop - start);
    SensorActivations acts = forward_sensor(params, gather_inputs(params, chunk));
    sensor.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(stop - start)) = acts.embedding;
  }
  round_to_float(sensor);  // match the precision of stored embeddings
  std::vector<std::string> phrases = vocab.phrases();
  Eigen::MatrixXd labels = forward_labels(params, phrases).embedding;
  return train_similarity(sensor, batch.positives, labels, config);
}

void write_similarity(std::ostream& out, const SimilarityModel& m) {
  io::BinaryWriter w(out);
  w.magic(kSimilarityMagic);
  w.u32(kSimilarityVersion);
  w.u8(m.mode == SimilarityMode::Mlp ? 0 : 1);
  w.u32(static_cast<std::uint32_t>(m.embed_dim));
  if (m.mode == SimilarityMode::CosineSigmoid) {
    w.u32(0);
    w.f32(static_cast<float>(m.scale));
  } else {
    w.u32(static_cast<std::uint32_t>(m.hidden()));
    for (Eigen::Index i = 0; i < m.w1.size(); ++i) w.f32(static_cast<float>(m.w1.data()[i]));
    for (Eigen::Index i = 0; i < m.b1.size(); ++i) w.f32(static_cast<float>(m.b1[i]));
    for (Eigen::Index i = 0; i < m.w2.size(); ++i) w.f32(static_cast<float>(m.w2[i]));
    w.f32(static_cast<float>(m.b2));
  }
  w.check();
}

SimilarityModel read_similarity(std::istream& in) {
  io::BinaryReader r(in);
  r.expect_magic(kSimilarityMagic);
  const std::uint32_t version = r.u32();
  if (version != kSimilarityVersion) {
    throw Error(ErrorCode::kFormat, "unsupported similarity model version " + std::to_string(version));
  }
  const std::uint8_t mode = r.u8();
  if (mode > 1) throw Error(ErrorCode::kFormat, "unknown similarity mode byte " + std::to_string(mode));
  SimilarityModel m;
  m.embed_dim = static_cast<int>(r.u32());
  const int hidden = static_cast<int>(r.u32());
  if (mode == 1) {
    m.mode = SimilarityMode::CosineSigmoid;
    m.scale = static_cast<double>(r.f32());
  } else {
    m.mode = SimilarityMode::Mlp;
    m.w1.resize(hidden, 2 * m.embed_dim);
    for (Eigen::Index i = 0; i < m.w1.size(); ++i) m.w1.data()[i] = r.f32();
    m.b1.resize(hidden);
    for (Eigen::Index i = 0; i < m.b1.size(); ++i) m.b1[i] = r.f32();
    m.w2.resize(hidden);
    for (Eigen::Index i = 0; i < m.w2.size(); ++i) m.w2[i] = r.f32();
    m.b2 = r.f32();
  }
  if (!r.at_end()) throw Error(ErrorCode::kFormat, "trailing bytes after similarity model");
  return m;
}

void save_similarity(const std::filesystem::path& path, const SimilarityModel& model) {
  io::write_atomically(path, [&](std::ostream& out) { write_similarity(out, model); });
}

SimilarityModel load_similarity(const std::filesystem::path& path) {
  std::ifstream in = io::open_binary(path);
  return read_similarity(in);
}

// ---------------------------------------------------------------------------
// Scoring and matching

ScoringIndex::ScoringIndex(const EmbeddingStore& store, const SimilarityModel& model)
    : store_(store), model_(model) {
  if (store.embed_dim() != model.embed_dim) {
    throw Error(ErrorCode::kPrecondition, "store and similarity model disagree on embedding dimension");
  }
  const Eigen::Index rows = model.mode == SimilarityMode::Mlp ? model.hidden() : model.embed_dim;
  cache_.resize(rows, static_cast<Eigen::Index>(store.size()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    cache_.col(static_cast<Eigen::Index>(i)) = model.project_sensor(store.embedding(i));
  }
}

ScoringIndex::PreparedLabel ScoringIndex::prepare(const Eigen::VectorXd& label) const {
  return {label, model_.project_label(label)};
}

double ScoringIndex::score(std::size_t record, const PreparedLabel& label) const {
  return sigmoid(logit_raw(model_, cache_.col(static_cast<Eigen::Index>(record)).data(), label.projection.data()));
}

MatchResult match_windows(const ScoringIndex& index, const Eigen::VectorXd& label,
                          const std::vector<Interval>& intervals, double h,
                          const std::optional<std::string>& user_id) {
  check_threshold(h);
  const WindowIndex& windows = index.store().index();
  const std::vector<std::size_t> records = windows.select(intervals, user_id);
  const ScoringIndex::PreparedLabel prepared = index.prepare(label);
  MatchResult out;
  for (std::size_t r : records) {
    const double s = index.score(r, prepared);
    if (s > h) {
      out.records.push_back(r);
      out.scores.push_back(s);
    }
  }
  // records come grouped by user; order everything by time
  std::vector<std::size_t> perm(out.records.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    return windows.timestamp(out.records[a]) < windows.timestamp(out.records[b]);
  });
  MatchResult sorted;
  for (std::size_t p : perm) {
    sorted.records.push_back(out.records[p]);
    sorted.scores.push_back(out.scores[p]);
    sorted.timestamps.push_back(windows.timestamp(out.records[p]));
  }
  return sorted;
}

std::vector<std::pair<std::string, double>> predict_labels(const ScoringIndex& index, const LabelVocabulary& vocab,
                                                           const Eigen::MatrixXd& vocab_embeddings,
                                                           std::string_view user_id, std::int64_t timestamp,
                                                           int k) {
  if (k <= 0) throw Error(ErrorCode::kPrecondition, "k must be positive");
  if (static_cast<std::size_t>(vocab_embeddings.cols()) != vocab.size()) {
    throw Error(ErrorCode::kPrecondition, "vocabulary embeddings do not match the vocabulary");
  }
  const auto record = index.store().index().find(user_id, timestamp);
  if (!record) {
    throw Error(ErrorCode::kNotFound,
                "no record for user '" + std::string(user_id) + "' at timestamp " + std::to_string(timestamp));
  }
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t a = 0; a < vocab.size(); ++a) {
    ranked.emplace_back(index.score(*record, index.prepare(vocab_embeddings.col(static_cast<Eigen::Index>(a)))), a);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  ranked.resize(std::min(ranked.size(), static_cast<std::size_t>(k)));
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [s, a] : ranked) out.emplace_back(vocab[a], s);
  return out;
}

}  // namespace tsqa
