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

#include "tsqa/timeline.hpp"

#include <bit>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "tsqa/error.hpp"

namespace tsqa {
namespace {

const ModalitySchema kSchema({{"acc", 2}, {"audio", 3}});

const char* kHeader = "timestamp,user_id,f:acc:0,f:acc:1,f:audio:0,f:audio:1,f:audio:2,label:sitting,label:walking\n";

Timeline parse(const std::string& csv) {
  std::istringstream in(csv);
  return parse_csv(in, kSchema);
}

ErrorCode parse_error(const std::string& csv) {
  try {
    parse(csv);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse error");
  return ErrorCode::kIo;
}

TEST_CASE("single row maps fields directly") {
  Timeline t = parse(std::string(kHeader) + "1443640620,u1,0.1,0.2,1,2,3,1,0\n");
  REQUIRE(t.size() == 1);
  const SensorWindow& w = t.windows[0];
  CHECK(w.timestamp == 1443640620);
  CHECK(w.user_id == "u1");
  CHECK(w.features[0] == std::vector<double>{0.1, 0.2});
  CHECK(w.labels == std::vector<std::string>{"sitting"});
  CHECK(w.missing == std::vector<bool>{false, false});
}

TEST_CASE("duplicate and out-of-order rows are rejected with a row number") {
  const std::string dup = std::string(kHeader) + "60,u1,0,0,0,0,0,0,0\n60,u1,0,0,0,0,0,0,0\n";
  CHECK(parse_error(dup) == ErrorCode::kDuplicate);
  const std::string back = std::string(kHeader) + "120,u1,0,0,0,0,0,0,0\n60,u1,0,0,0,0,0,0,0\n";
  try {
    parse(back);
    FAIL("expected ordering error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOrdering);
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("header validation") {
  CHECK(parse_error("") == ErrorCode::kSchema);
  CHECK(parse_error("timestamp,user_id,f:acc:0\n") == ErrorCode::kSchema);  // incomplete features
  CHECK(parse_error("timestamp,user_id,f:acc:0,f:acc:1,f:audio:0,f:audio:1,f:audio:2,bogus\n") ==
        ErrorCode::kFormat);
  CHECK(parse_error("timestamp,user_id,f:gps:0,f:acc:0,f:acc:1,f:audio:0,f:audio:1,f:audio:2\n") ==
        ErrorCode::kSchema);
  CHECK(parse_error(std::string(kHeader) + "60,u1,0,0,0,0,0,2,0\n") == ErrorCode::kFormat);
  CHECK(parse_error(std::string(kHeader) + "60,u1,0,0,0\n") == ErrorCode::kFormat);
}

TEST_CASE("missing-modality detection at half the cells") {
  // acc: 1 of 2 empty -> whole modality missing; audio: 1 of 3 empty -> cell sentinel.
  Timeline t = parse(std::string(kHeader) + "60,u1,,0.5,1,,3,0,1\n");
  const SensorWindow& w = t.windows[0];
  CHECK(w.missing == std::vector<bool>{true, false});
  CHECK(std::isnan(w.features[0][0]));
  CHECK(std::isnan(w.features[0][1]));
  CHECK(w.features[1][0] == 1.0);
  CHECK(std::isnan(w.features[1][1]));
  CHECK(w.labels == std::vector<std::string>{"walking"});
}

TEST_CASE("multi-user file yields per-user sorted windows") {
  // Three users, 1440 rows each, interleaved.
  std::ostringstream csv;
  csv << kHeader;
  for (int i = 0; i < 1440; ++i) {
    for (const char* u : {"u2", "u1", "u3"}) csv << 1443600000 + 60 * i << ',' << u << ",1,2,3,4,5,0,1\n";
  }
  const std::string text = csv.str();
  std::size_t data_rows = 0;  // independent recount by scanning lines
  for (std::size_t i = text.find('\n') + 1; i < text.size(); i = text.find('\n', i) + 1) ++data_rows;
  Timeline t = parse(text);
  CHECK(t.size() == data_rows);
  CHECK(t.size() == 4320);
  CHECK(t.users() == std::vector<std::string>{"u1", "u2", "u3"});
  for (std::size_t i = 1; i < t.size(); ++i) {
    const SensorWindow& a = t.windows[i - 1];
    const SensorWindow& b = t.windows[i];
    CHECK((a.user_id < b.user_id || (a.user_id == b.user_id && a.timestamp < b.timestamp)));
  }
}

TEST_CASE("write/parse round trip is identity on random timelines") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> val(-5, 5);
  std::bernoulli_distribution coin(0.2);
  for (int trial = 0; trial < 25; ++trial) {
    Timeline t;
    t.schema = kSchema;
    for (const char* u : {"a", "b"}) {
      std::int64_t ts = 1000;
      for (int i = 0; i < 30; ++i) {
        ts += 60 * (1 + static_cast<int>(rng() % 3));
        SensorWindow w;
        w.timestamp = ts;
        w.user_id = u;
        w.missing = {coin(rng), false};
        w.features = {{val(rng), val(rng)}, {val(rng), val(rng), val(rng)}};
        if (w.missing[0]) w.features[0] = {NAN, NAN};
        if (coin(rng)) w.features[1][2] = NAN;
        if (coin(rng)) w.labels.push_back("sitting");
        if (coin(rng)) w.labels.push_back("walking");
        t.windows.push_back(w);
      }
    }
    std::ostringstream out;
    write_csv(out, t);
    std::istringstream in(out.str());
    Timeline back = parse_csv(in, kSchema);
    CHECK(back == t);
  }
}

TEST_CASE("vocabulary is sorted and needs two phrases") {
  Timeline t = parse(std::string(kHeader) + "60,u1,0,0,0,0,0,1,0\n120,u1,0,0,0,0,0,0,1\n180,u1,0,0,0,0,0,1,0\n");
  LabelVocabulary v = build_vocabulary(t);
  CHECK(v.phrases() == std::vector<std::string>{"sitting", "walking"});
  CHECK(v.index_of("walking") == 1);
  CHECK_FALSE(v.index_of("running"));

  Timeline unlabeled = parse(std::string(kHeader) + "60,u1,0,0,0,0,0,0,0\n");
  CHECK_THROWS_AS(build_vocabulary(unlabeled), Error);
  CHECK_THROWS_AS(build_vocabulary(Timeline{}), Error);

  Timeline many;
  many.schema = kSchema;
  for (int i = 0; i < 51; ++i) {
    SensorWindow w;
    w.timestamp = 60 * i;
    w.user_id = "u";
    w.labels = {"label " + std::to_string(i)};
    many.windows.push_back(w);
  }
  CHECK(build_vocabulary(many).size() == 51);
}

TEST_CASE("imputation uses per-user means with global fallback") {
  Timeline t = parse(std::string(kHeader) +
                     "60,u1,1,10,1,1,1,0,0\n"
                     "120,u1,3,30,,,,0,0\n"
                     "180,u1,,,2,2,2,0,0\n"
                     "60,u2,5,50,,,,0,0\n");
  Timeline filled = impute_missing(t);
  // u1 acc mean = (1+3)/2, (10+30)/2.
  CHECK(filled.windows[2].features[0] == std::vector<double>{2.0, 20.0});
  // u1 audio mean over observed rows.
  CHECK(filled.windows[1].features[1] == std::vector<double>{1.5, 1.5, 1.5});
  // u2 has no audio at all: brute-force global mean over every observed audio cell.
  double sum = 0.0;
  int n = 0;
  for (const SensorWindow& w : t.windows) {
    if (!std::isnan(w.features[1][0])) {
      sum += w.features[1][0];
      ++n;
    }
  }
  CHECK(filled.windows[3].features[1][0] == doctest::Approx(sum / n));
  CHECK(filled.windows[3].missing[1]);  // provenance kept

  // Observed values untouched, bit for bit.
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t m = 0; m < 2; ++m) {
      for (std::size_t k = 0; k < t.windows[i].features[m].size(); ++k) {
        double x = t.windows[i].features[m][k];
        if (!std::isnan(x)) CHECK(std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(filled.windows[i].features[m][k]));
      }
    }
  }
  CHECK(impute_missing(filled) == filled);
}

TEST_CASE("imputation is identity without gaps and fails on an always-missing modality") {
  Timeline full = parse(std::string(kHeader) + "60,u1,1,2,3,4,5,0,0\n");
  CHECK(impute_missing(full) == full);
  Timeline none = parse(std::string(kHeader) + "60,u1,1,2,,,,0,0\n120,u1,1,2,,,,0,0\n");
  try {
    impute_missing(none);
    FAIL("expected imputation error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kImputation);
    CHECK(std::string(e.what()).find("audio") != std::string::npos);
  }
}

}  // namespace
}  // namespace tsqa
