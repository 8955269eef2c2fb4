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

#include "tsqa/error.hpp"

namespace tsqa {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kOrdering: return "ordering";
    case ErrorCode::kDuplicate: return "duplicate";
    case ErrorCode::kVocabulary: return "vocabulary";
    case ErrorCode::kImputation: return "imputation";
    case ErrorCode::kOutOfVocabulary: return "out_of_vocabulary";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kTrainingData: return "training_data";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kScope: return "scope";
    case ErrorCode::kDecomposition: return "decomposition";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kAssembly: return "assembly";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kConfiguration: return "configuration";
  }
  return "unknown";
}

}  // namespace tsqa
