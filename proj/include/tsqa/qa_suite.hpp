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

#ifndef TSQA_QA_SUITE_HPP_
#define TSQA_QA_SUITE_HPP_

// Synthetic QA records over a labelled timeline. Questions come from the
// decomposer grammar; reference answers run the grammar's own specs against
// the ground-truth labels and pass them through the template assembler.

#include <cstdint>
#include <vector>

#include "tsqa/decomposer.hpp"
#include "tsqa/eval.hpp"
#include "tsqa/query.hpp"
#include "tsqa/timeline.hpp"

namespace tsqa {

struct QaSuiteConfig {
  int per_category = 50;
  std::uint64_t seed = 0;
  bool multiple_choice = true;
  // Share of answers like "0 minutes" or "No" that is kept; the rest are redrawn.
  double empty_answer_rate = 0.2;
  QueryOptions query;
};

// 23:59:59 on the last day that has data.
std::int64_t suite_now(const Timeline& timeline);

std::vector<QaRecord> make_qa_suite(const Timeline& truth, const LabelVocabulary& vocab, const Lexicon& lexicon,
                                    const QaSuiteConfig& config);

}  // namespace tsqa

#endif  // TSQA_QA_SUITE_HPP_
