// Copyright 2026 The molfuse Authors.
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

#ifndef MOLFUSE_ERROR_H_
#define MOLFUSE_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace molfuse {

//! Every validation failure the library can report. The enumerator names are
//! the diagnostic names printed by the CLI.
enum class ErrorCode {
  // SMILES parsing
  kUnmatchedBracket,
  kUnclosedRing,
  kUnknownElement,
  kValenceViolation,
  kMultiFragmentInput,
  // fingerprints / curation
  kMismatchedWidth,
  kEmptyReferenceSet,
  // autodiff
  kShapeMismatch,
  kNonFiniteValue,
  kNotScalarOutput,
  // encoder / models
  kEmptyGraph,
  kDegenerateTask,
  kNonPositiveLogTarget,
  kEmptyBatch,
  kFoldLeakage,
  // fusion analysis
  kRowCountMismatch,
  kRankDeficiency,
  kWidthMismatch,
  kNoPresentTargets,
  // harness
  kMissingHeader,
  kNoTargets,
  kAllRowsInvalid,
  kTooFewRows,
  kInsufficientTargets,
  kVersionMismatch,
  kCorruptCheckpoint,
  kInvalidArgument,
};

std::string_view error_name(ErrorCode code);

//! Validation error. Thrown for bad inputs; anything else escaping the
//! library is an internal error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_name(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

//! SMILES diagnostic with the byte offset at which parsing failed.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t offset, const std::string& detail)
      : Error(code, detail + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace molfuse

#endif  // MOLFUSE_ERROR_H_
