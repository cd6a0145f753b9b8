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

#ifndef MOLFUSE_METRICS_H_
#define MOLFUSE_METRICS_H_

#include <span>
#include <vector>

#include "molfuse/matrix.h"
#include "molfuse/targets.h"

namespace molfuse {

struct TaskMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
};

//! Per-task metrics over present entries. R^2 = 1 - SSres/SStot; when every
//! present target is equal (SStot = 0) R^2 is 1 for an exact fit and 0
//! otherwise. Throws InsufficientTargets when a task has fewer than two
//! present entries.
std::vector<TaskMetrics> compute_metrics(const Matrix& predictions, const SparseTargets& targets);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 for a single value
};

MeanStd mean_std(std::span<const double> values);

}  // namespace molfuse

#endif  // MOLFUSE_METRICS_H_
