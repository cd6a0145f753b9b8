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

#ifndef MOLFUSE_TARGETS_H_
#define MOLFUSE_TARGETS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "molfuse/matrix.h"

namespace molfuse {

//! Target table with missing entries. Absent entries hold 0 in `values`
//! and are never read by losses or metrics.
struct SparseTargets {
  Matrix values;                    // n_molecules x n_tasks
  std::vector<std::uint8_t> mask;   // row-major, 1 = present

  SparseTargets() = default;
  SparseTargets(Matrix v, std::vector<std::uint8_t> m);
  //! Every entry present.
  explicit SparseTargets(Matrix v);

  std::size_t rows() const { return values.rows(); }
  std::size_t tasks() const { return values.cols(); }
  bool present(std::size_t i, std::size_t j) const { return mask[i * values.cols() + j] != 0; }
  std::size_t count_present(std::size_t task) const;
};

SparseTargets select_rows(const SparseTargets& t, std::span<const std::size_t> rows);
SparseTargets select_tasks(const SparseTargets& t, std::span<const std::size_t> tasks);

//! Per-task optional log10 followed by a z-score. Statistics use present
//! entries only; std is the population standard deviation.
struct TargetScaler {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::uint8_t> log10;

  std::size_t tasks() const { return mean.size(); }
  //! Raw units to scaled units (absent entries stay absent). Throws
  //! NonPositiveLogTarget for a non-positive present value in a log task.
  SparseTargets transform(const SparseTargets& raw) const;
  //! Scaled predictions to raw units.
  Matrix inverse(const Matrix& scaled) const;
};

//! Throws DegenerateTask for a task with fewer than two present values or
//! zero variance, NonPositiveLogTarget for a non-positive log-task value.
TargetScaler fit_scaler(const SparseTargets& targets, const std::vector<std::uint8_t>& log_flags);

}  // namespace molfuse

#endif  // MOLFUSE_TARGETS_H_
