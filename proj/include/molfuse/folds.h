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

#ifndef MOLFUSE_FOLDS_H_
#define MOLFUSE_FOLDS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace molfuse {

inline constexpr int kOuterFolds = 5;
inline constexpr int kInnerFolds = 4;
inline constexpr std::size_t kMinFoldRows = 10;

//! Nested split plan over row positions 0..n_rows-1.
struct FoldPlan {
  std::uint64_t seed = 0;
  std::size_t n_rows = 0;
  std::vector<int> outer;               // outer fold label per row
  std::vector<std::vector<int>> inner;  // per outer fold: inner label per row, -1 on its test rows

  std::vector<std::size_t> outer_test(int fold) const;
  std::vector<std::size_t> outer_train(int fold) const;
  std::vector<std::size_t> inner_validation(int fold, int inner_fold) const;
  std::vector<std::size_t> inner_train(int fold, int inner_fold) const;
  //! 16 hex digits identifying the assignment.
  std::string hash() const;
};

//! Seeded shuffle, then round-robin labels; each outer-train set is shuffled
//! again (seed derived from the fold) and dealt round-robin into the inner
//! folds. Throws TooFewRows for n_rows < 10.
FoldPlan make_folds(std::size_t n_rows, std::uint64_t seed);

}  // namespace molfuse

#endif  // MOLFUSE_FOLDS_H_
