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

#ifndef TSQA_ERROR_HPP_
#define TSQA_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace tsqa {

// Failure categories. Callers branch on the code (the service maps them to
// HTTP statuses, the CLI to exit codes); the message is for humans.
enum class ErrorCode {
  kSchema,
  kFormat,
  kOrdering,
  kDuplicate,
  kVocabulary,
  kImputation,
  kOutOfVocabulary,
  kPrecondition,
  kTrainingData,
  kNotFound,
  kIo,
  kScope,
  kDecomposition,
  kParse,
  kAssembly,
  kTransport,
  kProtocol,
  kConfiguration,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tsqa

#endif  // TSQA_ERROR_HPP_
