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

#include "molfuse/folds.h"

#include <cstdio>
#include <numeric>

#include "molfuse/error.h"
#include "molfuse/fingerprint.h"
#include "molfuse/random.h"

namespace molfuse {

namespace {

constexpr std::uint64_t kOuterStream = 0x6f75746572;
constexpr std::uint64_t kInnerStream = 0x696e6e6572;

void append_u64(std::vector<std::uint8_t>& bytes, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

std::vector<std::size_t> FoldPlan::outer_test(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n_rows; ++i) {
    if (outer[i] == fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldPlan::outer_train(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n_rows; ++i) {
    if (outer[i] != fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldPlan::inner_validation(int fold, int inner_fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n_rows; ++i) {
    if (inner[fold][i] == inner_fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldPlan::inner_train(int fold, int inner_fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n_rows; ++i) {
    if (inner[fold][i] >= 0 && inner[fold][i] != inner_fold) rows.push_back(i);
  }
  return rows;
}

std::string FoldPlan::hash() const {
  std::vector<std::uint8_t> bytes;
  append_u64(bytes, seed);
  append_u64(bytes, n_rows);
  for (int v : outer) append_u64(bytes, static_cast<std::uint64_t>(v));
  for (const auto& labels : inner) {
    for (int v : labels) append_u64(bytes, static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

FoldPlan make_folds(std::size_t n_rows, std::uint64_t seed) {
  if (n_rows < kMinFoldRows) {
    throw Error(ErrorCode::kTooFewRows, "nested cross-validation needs at least 10 rows, got " +
                                            std::to_string(n_rows));
  }
  FoldPlan plan;
  plan.seed = seed;
  plan.n_rows = n_rows;
  plan.outer.assign(n_rows, 0);
  std::vector<std::size_t> order(n_rows);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, {kOuterStream}));
  rng.shuffle(std::span(order));
  for (std::size_t k = 0; k < n_rows; ++k) plan.outer[order[k]] = static_cast<int>(k % kOuterFolds);

  for (int f = 0; f < kOuterFolds; ++f) {
    std::vector<int> labels(n_rows, -1);
    std::vector<std::size_t> train = plan.outer_train(f);
    Rng inner_rng(derive_seed(seed, {kInnerStream, static_cast<std::uint64_t>(f)}));
    inner_rng.shuffle(std::span(train));
    for (std::size_t k = 0; k < train.size(); ++k) labels[train[k]] = static_cast<int>(k % kInnerFolds);
    plan.inner.push_back(std::move(labels));
  }
  return plan;
}

}  // namespace molfuse
