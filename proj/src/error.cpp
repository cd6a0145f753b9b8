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

#include "molfuse/error.h"

namespace molfuse {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnmatchedBracket: return "UnmatchedBracket";
    case ErrorCode::kUnclosedRing: return "UnclosedRing";
    case ErrorCode::kUnknownElement: return "UnknownElement";
    case ErrorCode::kValenceViolation: return "ValenceViolation";
    case ErrorCode::kMultiFragmentInput: return "MultiFragmentInput";
    case ErrorCode::kMismatchedWidth: return "MismatchedWidth";
    case ErrorCode::kEmptyReferenceSet: return "EmptyReferenceSet";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kNotScalarOutput: return "NotScalarOutput";
    case ErrorCode::kEmptyGraph: return "EmptyGraph";
    case ErrorCode::kDegenerateTask: return "DegenerateTask";
    case ErrorCode::kNonPositiveLogTarget: return "NonPositiveLogTarget";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kFoldLeakage: return "FoldLeakage";
    case ErrorCode::kRowCountMismatch: return "RowCountMismatch";
    case ErrorCode::kRankDeficiency: return "RankDeficiency";
    case ErrorCode::kWidthMismatch: return "WidthMismatch";
    case ErrorCode::kNoPresentTargets: return "NoPresentTargets";
    case ErrorCode::kMissingHeader: return "MissingHeader";
    case ErrorCode::kNoTargets: return "NoTargets";
    case ErrorCode::kAllRowsInvalid: return "AllRowsInvalid";
    case ErrorCode::kTooFewRows: return "TooFewRows";
    case ErrorCode::kInsufficientTargets: return "InsufficientTargets";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kCorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace molfuse
