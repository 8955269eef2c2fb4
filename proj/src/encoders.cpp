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

#include "tsqa/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "tsqa/binary_io.hpp"
#include "tsqa/error.hpp"
#include "tsqa/text.hpp"

namespace tsqa {
namespace {

constexpr std::string_view kParamMagic = "SCPM";
constexpr std::uint32_t kParamVersion = 1;
constexpr double kMinNorm = 1e-12;
constexpr int kDefaultHidden = 64;

// Portable uniform draw in [-s, s); std::uniform_real_distribution is not
// bit-reproducible across standard libraries.
double uniform_symmetric(std::mt19937_64& rng, double s) {
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return (2.0 * u - 1.0) * s;
}

void fill_glorot(Eigen::MatrixXd& m, std::mt19937_64& rng, int fan_in, int fan_out) {
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = uniform_symmetric(rng, s);
  }
}

void normalize_columns(const Eigen::MatrixXd& in, bool normalize, Eigen::MatrixXd& out, Eigen::VectorXd& norms) {
  norms = in.colwise().norm().transpose();
  out = in;
  if (!normalize) return;
  for (Eigen::Index c = 0; c < in.cols(); ++c) {
    if (norms(c) > kMinNorm) out.col(c) /= norms(c);
  }
}

// d(loss)/d(raw) for raw -> raw / |raw|, given d(loss)/d(normalized).
Eigen::MatrixXd normalize_backward(const Eigen::MatrixXd& normalized, const Eigen::VectorXd& norms,
                                   const Eigen::MatrixXd& d_normalized, bool normalize) {
  if (!normalize) return d_normalized;
  Eigen::MatrixXd d_raw = d_normalized;
  for (Eigen::Index c = 0; c < d_raw.cols(); ++c) {
    if (norms(c) <= kMinNorm) continue;
    const double proj = normalized.col(c).dot(d_normalized.col(c));
    d_raw.col(c) = (d_normalized.col(c) - proj * normalized.col(c)) / norms(c);
  }
  return d_raw;
}

}  // namespace

// ---------------------------------------------------------------------------
// EncoderConfig

std::vector<int> EncoderConfig::resolved_hidden(const ModalitySchema& schema) const {
  if (hidden_widths.empty()) return std::vector<int>(schema.size(), kDefaultHidden);
  if (hidden_widths.size() == 1) return std::vector<int>(schema.size(), hidden_widths.front());
  return hidden_widths;
}

void EncoderConfig::validate(const ModalitySchema& schema) const {
  if (embed_dim < 2) throw Error(ErrorCode::kPrecondition, "embed_dim must be >= 2");
  if (hidden_widths.size() > 1 && hidden_widths.size() != schema.size()) {
    throw Error(ErrorCode::kPrecondition, "hidden_widths must have one entry per modality");
  }
  for (int h : hidden_widths) {
    if (h < 1) throw Error(ErrorCode::kPrecondition, "hidden widths must be >= 1");
  }
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden_widths = j.value("hidden_widths", c.hidden_widths);
  c.seed = j.value("seed", c.seed);
  c.normalize = j.value("normalize", c.normalize);
  std::string mode = j.value("feature_mode", std::string("raw_window"));
  if (mode == "raw_window") {
    c.feature_mode = FeatureMode::RawWindow;
  } else if (mode == "statistical") {
    c.feature_mode = FeatureMode::Statistical;
  } else {
    throw Error(ErrorCode::kConfiguration, "unknown feature_mode '" + mode + "'");
  }
  return c;
}

nlohmann::json EncoderConfig::to_json() const {
  return {{"embed_dim", embed_dim},
          {"hidden_widths", hidden_widths},
          {"seed", seed},
          {"normalize", normalize},
          {"feature_mode", feature_mode == FeatureMode::RawWindow ? "raw_window" : "statistical"}};
}

// ---------------------------------------------------------------------------
// Parameters

int Parameters::token_index(std::string_view token) const {
  auto it = std::lower_bound(tokens.begin(), tokens.end(), token);
  if (it == tokens.end() || *it != token) return -1;
  return static_cast<int>(it - tokens.begin());
}

std::vector<std::span<double>> Parameters::tensors() {
  std::vector<std::span<double>> out;
  auto add = [&](auto& t) { out.emplace_back(t.data(), static_cast<std::size_t>(t.size())); };
  for (ModalityEncoder& m : modalities) {
    add(m.w1);
    add(m.b1);
    add(m.w2);
    add(m.b2);
  }
  add(fusion_w);
  add(fusion_b);
  add(token_table);
  return out;
}

std::vector<std::span<const double>> Parameters::tensors() const {
  std::vector<std::span<const double>> out;
  for (std::span<double> s : const_cast<Parameters*>(this)->tensors()) out.emplace_back(s.data(), s.size());
  return out;
}

std::size_t Parameters::parameter_count() const {
  std::size_t n = 0;
  for (auto t : tensors()) n += t.size();
  return n;
}

int modality_input_dim(FeatureMode mode, const Modality& modality) {
  return mode == FeatureMode::Statistical ? 4 : modality.dim;
}

Parameters init_parameters(const EncoderConfig& config, const ModalitySchema& schema, const LabelVocabulary& vocab) {
  config.validate(schema);
  if (vocab.size() == 0) throw Error(ErrorCode::kVocabulary, "empty vocabulary");
  Parameters p;
  p.config = config;
  p.schema = schema;
  p.vocabulary = vocab;
  p.hidden_widths = config.resolved_hidden(schema);

  std::mt19937_64 rng(config.seed);
  int concat_dim = 0;
  for (std::size_t m = 0; m < schema.size(); ++m) {
    const int in = modality_input_dim(config.feature_mode, schema[m]);
    const int hid = p.hidden_widths[m];
    ModalityEncoder enc;
    enc.w1.resize(hid, in);
    fill_glorot(enc.w1, rng, in, hid);
    enc.b1 = Eigen::VectorXd::Zero(hid);
    enc.w2.resize(hid, hid);
    fill_glorot(enc.w2, rng, hid, hid);
    enc.b2 = Eigen::VectorXd::Zero(hid);
    p.modalities.push_back(std::move(enc));
    concat_dim += hid;
  }
  p.fusion_w.resize(config.embed_dim, concat_dim);
  fill_glorot(p.fusion_w, rng, concat_dim, config.embed_dim);
  p.fusion_b = Eigen::VectorXd::Zero(config.embed_dim);

  std::set<std::string> tokens;
  for (const std::string& phrase : vocab.phrases()) {
    for (std::string& t : text::tokenize(phrase)) tokens.insert(std::move(t));
  }
  p.tokens.assign(tokens.begin(), tokens.end());
  // The table acts as a linear map from one-hot token indicators.
  p.token_table.resize(config.embed_dim, static_cast<Eigen::Index>(p.tokens.size()));
  fill_glorot(p.token_table, rng, static_cast<int>(p.tokens.size()), config.embed_dim);
  return p;
}

Parameters zeros_like(const Parameters& params) {
  Parameters z = params;
  for (std::span<double> t : z.tensors()) std::fill(t.begin(), t.end(), 0.0);
  return z;
}

// ---------------------------------------------------------------------------
// Inputs

Eigen::VectorXd statistical_features(const SensorWindow& window) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(4 * window.features.size()));
  for (std::size_t m = 0; m < window.features.size(); ++m) {
    const std::vector<double>& v = window.features[m];
    double mean = 0.0;
    double lo = v.empty() ? 0.0 : v.front();
    double hi = lo;
    for (double x : v) {
      mean += x;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    mean /= static_cast<double>(std::max<std::size_t>(v.size(), 1));
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(std::max<std::size_t>(v.size(), 1));
    out.segment(static_cast<Eigen::Index>(4 * m), 4) << mean, std::sqrt(var), lo, hi;
  }
  return out;
}

Eigen::VectorXd modality_input(const Parameters& params, const SensorWindow& window, std::size_t modality) {
  if (window.features.size() != params.schema.size()) {
    throw Error(ErrorCode::kSchema, "window has " + std::to_string(window.features.size()) +
                                        " modalities, schema has " + std::to_string(params.schema.size()));
  }
  const std::vector<double>& v = window.features[modality];
  if (static_cast<int>(v.size()) != params.schema[modality].dim) {
    throw Error(ErrorCode::kSchema, "modality '" + params.schema[modality].name + "' has wrong width");
  }
  for (double x : v) {
    if (std::isnan(x)) {
      throw Error(ErrorCode::kPrecondition,
                  "window at " + std::to_string(window.timestamp) + " has missing values; impute first");
    }
  }
  if (params.config.feature_mode == FeatureMode::RawWindow) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  SensorWindow single;
  single.features = {v};
  return statistical_features(single);
}

ModalityInputs gather_inputs(const Parameters& params, std::span<const SensorWindow* const> windows) {
  ModalityInputs inputs(params.schema.size());
  for (std::size_t m = 0; m < params.schema.size(); ++m) {
    inputs[m].resize(modality_input_dim(params.config.feature_mode, params.schema[m]),
                     static_cast<Eigen::Index>(windows.size()));
  }
  for (std::size_t i = 0; i < windows.size(); ++i) {
    for (std::size_t m = 0; m < params.schema.size(); ++m) {
      inputs[m].col(static_cast<Eigen::Index>(i)) = modality_input(params, *windows[i], m);
    }
  }
  return inputs;
}

// ---------------------------------------------------------------------------
// Sensor encoder

SensorActivations forward_sensor(const Parameters& params, const ModalityInputs& inputs) {
  SensorActivations a;
  const Eigen::Index batch = inputs.empty() ? 0 : inputs.front().cols();
  int concat_dim = 0;
  for (int h : params.hidden_widths) concat_dim += h;
  a.concat.resize(concat_dim, batch);
  int offset = 0;
  for (std::size_t m = 0; m < params.modalities.size(); ++m) {
    const ModalityEncoder& enc = params.modalities[m];
    Eigen::MatrixXd pre = (enc.w1 * inputs[m]).colwise() + enc.b1;
    Eigen::MatrixXd hid = pre.cwiseMax(0.0);
    a.concat.middleRows(offset, enc.w2.rows()) = (enc.w2 * hid).colwise() + enc.b2;
    offset += static_cast<int>(enc.w2.rows());
    a.pre_hidden.push_back(std::move(pre));
    a.hidden.push_back(std::move(hid));
  }
  a.fused = (params.fusion_w * a.concat).colwise() + params.fusion_b;
  normalize_columns(a.fused, params.config.normalize, a.embedding, a.norms);
  return a;
}

void backward_sensor(const Parameters& params, const ModalityInputs& inputs, const SensorActivations& acts,
                     const Eigen::MatrixXd& d_embedding, Parameters& grad) {
  Eigen::MatrixXd d_fused = normalize_backward(acts.embedding, acts.norms, d_embedding, params.config.normalize);
  grad.fusion_w.noalias() += d_fused * acts.concat.transpose();
  grad.fusion_b += d_fused.rowwise().sum();
  Eigen::MatrixXd d_concat = params.fusion_w.transpose() * d_fused;
  int offset = 0;
  for (std::size_t m = 0; m < params.modalities.size(); ++m) {
    const ModalityEncoder& enc = params.modalities[m];
    ModalityEncoder& g = grad.modalities[m];
    const Eigen::Index hid = enc.w2.rows();
    Eigen::MatrixXd d_out = d_concat.middleRows(offset, hid);
    offset += static_cast<int>(hid);
    g.w2.noalias() += d_out * acts.hidden[m].transpose();
    g.b2 += d_out.rowwise().sum();
    Eigen::MatrixXd d_pre = (enc.w2.transpose() * d_out).cwiseProduct(
        (acts.pre_hidden[m].array() > 0.0).cast<double>().matrix());
    g.w1.noalias() += d_pre * inputs[m].transpose();
    g.b1 += d_pre.rowwise().sum();
  }
}

Embedding encode_sensor(const Parameters& params, const SensorWindow& window) {
  const SensorWindow* ptr = &window;
  ModalityInputs inputs = gather_inputs(params, std::span<const SensorWindow* const>(&ptr, 1));
  return forward_sensor(params, inputs).embedding.col(0);
}

// ---------------------------------------------------------------------------
// Label encoder

LabelActivations forward_labels(const Parameters& params, std::span<const std::string> phrases) {
  LabelActivations a;
  a.mean = Eigen::MatrixXd::Zero(params.embed_dim(), static_cast<Eigen::Index>(phrases.size()));
  for (std::size_t p = 0; p < phrases.size(); ++p) {
    std::vector<int> ids;
    std::vector<std::string> unknown;
    for (const std::string& tok : text::tokenize(phrases[p])) {
      int id = params.token_index(tok);
      if (id < 0) {
        unknown.push_back(tok);
      } else {
        ids.push_back(id);
      }
    }
    if (!unknown.empty()) {
      throw Error(ErrorCode::kOutOfVocabulary, "out-of-vocabulary token(s) in '" + phrases[p] +
                                                   "': " + text::join(unknown, ", "));
    }
    if (ids.empty()) throw Error(ErrorCode::kOutOfVocabulary, "phrase '" + phrases[p] + "' has no tokens");
    for (int id : ids) a.mean.col(static_cast<Eigen::Index>(p)) += params.token_table.col(id);
    a.mean.col(static_cast<Eigen::Index>(p)) /= static_cast<double>(ids.size());
    a.token_ids.push_back(std::move(ids));
  }
  normalize_columns(a.mean, params.config.normalize, a.embedding, a.norms);
  return a;
}

void backward_labels(const Parameters& params, const LabelActivations& acts, const Eigen::MatrixXd& d_embedding,
                     Parameters& grad) {
  Eigen::MatrixXd d_mean = normalize_backward(acts.embedding, acts.norms, d_embedding, params.config.normalize);
  for (std::size_t p = 0; p < acts.token_ids.size(); ++p) {
    const double share = 1.0 / static_cast<double>(acts.token_ids[p].size());
    for (int id : acts.token_ids[p]) grad.token_table.col(id) += share * d_mean.col(static_cast<Eigen::Index>(p));
  }
}

Embedding encode_label(const Parameters& params, std::string_view phrase) {
  std::string s(phrase);
  return forward_labels(params, std::span<const std::string>(&s, 1)).embedding.col(0);
}

Eigen::MatrixXd encode_vocabulary(const Parameters& params) {
  return forward_labels(params, params.vocabulary.phrases()).embedding;
}

// ---------------------------------------------------------------------------
// Parameter file

void write_parameters(std::ostream& out, const Parameters& params) {
  io::BinaryWriter w(out);
  w.magic(kParamMagic);
  w.u32(kParamVersion);
  w.u32(static_cast<std::uint32_t>(params.schema.size()));
  for (const Modality& m : params.schema.modalities()) {
    w.short_string(m.name);
    w.u32(static_cast<std::uint32_t>(m.dim));
  }
  w.u32(static_cast<std::uint32_t>(params.config.embed_dim));
  w.u32(static_cast<std::uint32_t>(params.hidden_widths.size()));
  for (int h : params.hidden_widths) w.u32(static_cast<std::uint32_t>(h));
  w.u64(params.config.seed);
  w.u8(params.config.normalize ? 1 : 0);
  w.u8(params.config.feature_mode == FeatureMode::RawWindow ? 0 : 1);
  w.u32(static_cast<std::uint32_t>(params.vocabulary.size()));
  for (const std::string& p : params.vocabulary.phrases()) w.short_string(p);
  w.u32(static_cast<std::uint32_t>(params.tokens.size()));
  for (const std::string& t : params.tokens) w.short_string(t);
  for (std::span<const double> t : params.tensors()) {
    for (double x : t) w.f32(static_cast<float>(x));
  }
  w.check();
}

Parameters read_parameters(std::istream& in) {
  io::BinaryReader r(in);
  r.expect_magic(kParamMagic);
  const std::uint32_t version = r.u32();
  if (version != kParamVersion) {
    throw Error(ErrorCode::kFormat, "unsupported parameter file version " + std::to_string(version));
  }
  std::vector<Modality> mods(r.u32());
  for (Modality& m : mods) {
    m.name = r.short_string();
    m.dim = static_cast<int>(r.u32());
  }
  ModalitySchema schema(std::move(mods));
  EncoderConfig config;
  config.embed_dim = static_cast<int>(r.u32());
  config.hidden_widths.resize(r.u32());
  for (int& h : config.hidden_widths) h = static_cast<int>(r.u32());
  config.seed = r.u64();
  config.normalize = r.u8() != 0;
  config.feature_mode = r.u8() == 0 ? FeatureMode::RawWindow : FeatureMode::Statistical;
  std::vector<std::string> phrases(r.u32());
  for (std::string& p : phrases) p = r.short_string();
  std::vector<std::string> tokens(r.u32());
  for (std::string& t : tokens) t = r.short_string();

  Parameters p = init_parameters(config, schema, LabelVocabulary(std::move(phrases)));
  if (p.tokens != tokens) throw Error(ErrorCode::kFormat, "token table does not match the stored vocabulary");
  for (std::span<double> t : p.tensors()) {
    for (double& x : t) x = static_cast<double>(r.f32());
  }
  return p;
}

void save_parameters(const std::filesystem::path& path, const Parameters& params) {
  io::write_atomically(path, [&](std::ostream& out) { write_parameters(out, params); });
}

Parameters load_parameters(const std::filesystem::path& path) {
  std::ifstream in = io::open_binary(path);
  return read_parameters(in);
}

}  // namespace tsqa
