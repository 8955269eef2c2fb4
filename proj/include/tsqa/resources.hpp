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

#ifndef TSQA_RESOURCES_HPP_
#define TSQA_RESOURCES_HPP_

// Text files compiled into the library (templates/*.txt, synonyms.tsv).

#include <string_view>
#include <vector>

namespace tsqa::resources {

struct Resource {
  std::string_view name;
  std::string_view content;
};

const std::vector<Resource>& all();

}  // namespace tsqa::resources

#endif  // TSQA_RESOURCES_HPP_
