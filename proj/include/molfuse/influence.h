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

#ifndef MOLFUSE_INFLUENCE_H_
#define MOLFUSE_INFLUENCE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "molfuse/models.h"

namespace molfuse {

struct InfluenceMatrix {
  Matrix a;  // n_blocks x n_tasks, RMSE_clean / RMSE_noised
  double multiplier = 3.0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> blocks;
  std::vector<std::string> tasks;
};

//! Per-task RMSE over present entries, in the model's scaled units. Throws
//! NoPresentTargets when a task has no present entry.
std::vector<double> scaled_rmse(const FusedModel& model, const Matrix& fused, const SparseTargets& raw_targets);

//! For each block i, Gaussian noise with standard deviation multiplier * sigma_i
//! (sigma_i: population std over all entries of block i in `fused`) is added
//! to that block only, with a generator seeded from (seed, i). Requires a
//! concat-mode model.
InfluenceMatrix influence_matrix(const FusedModel& model, const Matrix& fused, const SparseTargets& raw_targets,
                                 double multiplier, std::uint64_t seed);

//! Element-wise mean of influence_matrix over `seeds`.
InfluenceMatrix influence_averaged(const FusedModel& model, const Matrix& fused, const SparseTargets& raw_targets,
                                   double multiplier, std::span<const std::uint64_t> seeds);

}  // namespace molfuse

#endif  // MOLFUSE_INFLUENCE_H_
