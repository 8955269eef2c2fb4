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

#include <bit>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "tsqa/error.hpp"

namespace tsqa {
namespace {

const ModalitySchema kSchema({{"acc", 3}, {"phone", 2}});

SensorWindow window(std::vector<double> acc, std::vector<double> phone) {
  SensorWindow w;
  w.timestamp = 60;
  w.user_id = "u";
  w.features = {std::move(acc), std::move(phone)};
  w.missing = {false, false};
  return w;
}

Parameters small_params(bool normalize = true, std::uint64_t seed = 3) {
  EncoderConfig c;
  c.embed_dim = 8;
  c.hidden_widths = {5, 4};
  c.seed = seed;
  c.normalize = normalize;
  return init_parameters(c, kSchema, LabelVocabulary({"at home", "walking", "doing computer work"}));
}

bool bit_identical(const Parameters& a, const Parameters& b) {
  auto ta = a.tensors();
  auto tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].size() != tb[i].size()) return false;
    for (std::size_t k = 0; k < ta[i].size(); ++k) {
      if (std::bit_cast<std::uint64_t>(ta[i][k]) != std::bit_cast<std::uint64_t>(tb[i][k])) return false;
    }
  }
  return true;
}

TEST_CASE("initialization is deterministic and shaped by the config") {
  CHECK(bit_identical(small_params(), small_params()));
  CHECK_FALSE(bit_identical(small_params(true, 3), small_params(true, 4)));

  EncoderConfig c;
  c.embed_dim = 512;
  Parameters p = init_parameters(c, kSchema, LabelVocabulary({"at home", "walking"}));
  CHECK(p.fusion_w.rows() == 512);
  CHECK(p.fusion_b.size() == 512);
  CHECK(p.token_table.rows() == 512);
  CHECK(encode_label(p, "walking").size() == 512);
  CHECK(p.tokens == std::vector<std::string>{"at", "home", "walking"});

  // Glorot bound on the first layer.
  const double s = std::sqrt(6.0 / (3 + 64));
  CHECK(p.modalities[0].w1.cwiseAbs().maxCoeff() <= s);

  EncoderConfig bad;
  bad.embed_dim = 1;
  CHECK_THROWS_AS(init_parameters(bad, kSchema, LabelVocabulary({"a", "b"})), Error);
}

TEST_CASE("sensor encoder output") {
  Parameters p = small_params(false);
  for (std::span<double> t : p.tensors()) std::fill(t.begin(), t.end(), 0.0);
  CHECK(encode_sensor(p, window({1, 2, 3}, {4, 5})).isZero());

  Parameters q = small_params(true);
  std::mt19937 rng(1);
  std::normal_distribution<double> n(0, 1);
  for (int i = 0; i < 50; ++i) {
    SensorWindow w = window({n(rng), n(rng), n(rng)}, {n(rng), n(rng)});
    Embedding e = encode_sensor(q, w);
    CHECK(std::abs(e.norm() - 1.0) < 1e-6);
    CHECK(encode_sensor(q, w) == e);
  }

  CHECK_THROWS_AS(encode_sensor(q, window({1, 2}, {1, 2})), Error);
  CHECK_THROWS_AS(encode_sensor(q, window({1, NAN, 2}, {1, 2})), Error);
}

TEST_CASE("label encoder composes token vectors") {
  Parameters p = small_params(true);
  const int walking = p.token_index("walking");
  Eigen::VectorXd single = p.token_table.col(walking);
  CHECK((encode_label(p, "walking") - single.normalized()).norm() < 1e-12);

  Eigen::VectorXd u = p.token_table.col(p.token_index("at"));
  Eigen::VectorXd v = p.token_table.col(p.token_index("home"));
  CHECK((encode_label(p, "at home") - ((u + v) / 2).normalized()).norm() < 1e-12);
  CHECK((encode_label(p, "At Home!") - encode_label(p, "at home")).norm() == 0.0);

  CHECK((encode_label(p, "doing computer work") - encode_label(p, "computer work doing")).norm() < 1e-12);

  try {
    encode_label(p, "walking on the moon");
    FAIL("expected OOV error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOutOfVocabulary);
    CHECK(std::string(e.what()).find("moon") != std::string::npos);
  }

  Parameters scaled = p;
  scaled.token_table *= 7.5;
  for (const std::string& phrase : p.vocabulary.phrases()) {
    CHECK((encode_label(scaled, phrase) - encode_label(p, phrase)).norm() < 1e-12);
  }
  CHECK(encode_vocabulary(p).cols() == 3);
}

TEST_CASE("statistical features") {
  SensorWindow w = window({1, 2, 3}, {4, 4});
  Eigen::VectorXd f = statistical_features(w);
  REQUIRE(f.size() == 8);
  CHECK(f(0) == doctest::Approx(2.0));
  CHECK(f(1) == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  CHECK(f(2) == 1.0);
  CHECK(f(3) == 3.0);
  CHECK(f(5) == 0.0);  // constant modality

  EncoderConfig c;
  c.embed_dim = 4;
  c.feature_mode = FeatureMode::Statistical;
  Parameters p = init_parameters(c, kSchema, LabelVocabulary({"a", "b"}));
  CHECK(p.modalities[0].w1.cols() == 4);
  CHECK(std::abs(encode_sensor(p, w).norm() - 1.0) < 1e-6);
}

TEST_CASE("parameter file round trip and validation") {
  Parameters p = small_params();
  std::ostringstream first;
  write_parameters(first, p);
  std::istringstream in(first.str());
  Parameters loaded = read_parameters(in);
  std::ostringstream second;
  write_parameters(second, loaded);
  CHECK(first.str() == second.str());
  CHECK(first.str().substr(0, 4) == "SCPM");
  CHECK(loaded.vocabulary == p.vocabulary);
  CHECK(loaded.schema == p.schema);

  std::string corrupt = first.str();
  corrupt[0] = 'X';
  std::istringstream bad(corrupt);
  CHECK_THROWS_AS(read_parameters(bad), Error);

  std::string future = first.str();
  future[4] = 9;
  std::istringstream bad_version(future);
  CHECK_THROWS_AS(read_parameters(bad_version), Error);
}

}  // namespace
}  // namespace tsqa
