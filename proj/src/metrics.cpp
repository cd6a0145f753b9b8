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

#include "molfuse/metrics.h"

#include <cmath>
#include <string>

#include "molfuse/error.h"

namespace molfuse {

std::vector<TaskMetrics> compute_metrics(const Matrix& predictions, const SparseTargets& targets) {
  if (!predictions.same_shape(targets.values)) {
    throw Error(ErrorCode::kShapeMismatch, "predictions and targets differ in shape");
  }
  std::vector<TaskMetrics> out;
  for (std::size_t j = 0; j < targets.tasks(); ++j) {
    double mean = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < targets.rows(); ++i) {
      if (!targets.present(i, j)) continue;
      mean += targets.values(i, j);
      ++n;
    }
    if (n < 2) {
      throw Error(ErrorCode::kInsufficientTargets,
                  "task " + std::to_string(j) + " has " + std::to_string(n) + " evaluation targets");
    }
    mean /= static_cast<double>(n);
    double ss_res = 0.0, ss_tot = 0.0, abs_sum = 0.0;
    for (std::size_t i = 0; i < targets.rows(); ++i) {
      if (!targets.present(i, j)) continue;
      const double r = predictions(i, j) - targets.values(i, j);
      ss_res += r * r;
      abs_sum += std::abs(r);
      ss_tot += (targets.values(i, j) - mean) * (targets.values(i, j) - mean);
    }
    TaskMetrics m;
    m.rmse = std::sqrt(ss_res / static_cast<double>(n));
    m.mae = abs_sum / static_cast<double>(n);
    if (ss_tot > 0.0) {
      m.r2 = 1.0 - ss_res / ss_tot;
    } else {
      m.r2 = ss_res == 0.0 ? 1.0 : 0.0;
    }
    out.push_back(m);
  }
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

}  // namespace molfuse
