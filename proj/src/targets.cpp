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

#include "molfuse/targets.h"

#include <cmath>
#include <string>

#include "molfuse/error.h"

namespace molfuse {

SparseTargets::SparseTargets(Matrix v, std::vector<std::uint8_t> m) : values(std::move(v)), mask(std::move(m)) {
  if (mask.size() != values.size()) throw Error(ErrorCode::kShapeMismatch, "mask size does not match values");
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] && !std::isfinite(values.values()[i])) {
      throw Error(ErrorCode::kNonFiniteValue, "present target is not finite");
    }
  }
}

SparseTargets::SparseTargets(Matrix v) : SparseTargets(v, std::vector<std::uint8_t>(v.size(), 1)) {}

std::size_t SparseTargets::count_present(std::size_t task) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < rows(); ++i) n += present(i, task) ? 1 : 0;
  return n;
}

SparseTargets select_rows(const SparseTargets& t, std::span<const std::size_t> rows) {
  SparseTargets out;
  out.values = select_rows(t.values, rows);
  out.mask.reserve(rows.size() * t.tasks());
  for (std::size_t r : rows) {
    for (std::size_t j = 0; j < t.tasks(); ++j) out.mask.push_back(t.mask[r * t.tasks() + j]);
  }
  return out;
}

SparseTargets select_tasks(const SparseTargets& t, std::span<const std::size_t> tasks) {
  SparseTargets out;
  out.values = Matrix(t.rows(), tasks.size());
  out.mask.assign(t.rows() * tasks.size(), 0);
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < tasks.size(); ++j) {
      out.values(i, j) = t.values(i, tasks[j]);
      out.mask[i * tasks.size() + j] = t.mask[i * t.tasks() + tasks[j]];
    }
  }
  return out;
}

namespace {

double forward_log(double v, std::size_t task) {
  if (!(v > 0.0)) {
    throw Error(ErrorCode::kNonPositiveLogTarget,
                "task " + std::to_string(task) + " has non-positive value " + std::to_string(v) + " under log10");
  }
  return std::log10(v);
}

}  // namespace

TargetScaler fit_scaler(const SparseTargets& targets, const std::vector<std::uint8_t>& log_flags) {
  if (log_flags.size() != targets.tasks()) throw Error(ErrorCode::kShapeMismatch, "one log flag per task required");
  TargetScaler s;
  s.log10 = log_flags;
  for (std::size_t j = 0; j < targets.tasks(); ++j) {
    std::vector<double> vals;
    for (std::size_t i = 0; i < targets.rows(); ++i) {
      if (!targets.present(i, j)) continue;
      const double v = targets.values(i, j);
      vals.push_back(log_flags[j] ? forward_log(v, j) : v);
    }
    if (vals.size() < 2) {
      throw Error(ErrorCode::kDegenerateTask, "task " + std::to_string(j) + " has fewer than two values");
    }
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(vals.size()));
    if (!(sd > 0.0)) throw Error(ErrorCode::kDegenerateTask, "task " + std::to_string(j) + " has zero variance");
    s.mean.push_back(mean);
    s.stddev.push_back(sd);
  }
  return s;
}

SparseTargets TargetScaler::transform(const SparseTargets& raw) const {
  if (raw.tasks() != tasks()) throw Error(ErrorCode::kShapeMismatch, "scaler task count differs");
  SparseTargets out = raw;
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    for (std::size_t j = 0; j < raw.tasks(); ++j) {
      if (!raw.present(i, j)) {
        out.values(i, j) = 0.0;
        continue;
      }
      const double v = log10[j] ? forward_log(raw.values(i, j), j) : raw.values(i, j);
      out.values(i, j) = (v - mean[j]) / stddev[j];
    }
  }
  return out;
}

Matrix TargetScaler::inverse(const Matrix& scaled) const {
  if (scaled.cols() != tasks()) throw Error(ErrorCode::kShapeMismatch, "scaler task count differs");
  Matrix out(scaled.rows(), scaled.cols());
  for (std::size_t i = 0; i < scaled.rows(); ++i) {
    for (std::size_t j = 0; j < scaled.cols(); ++j) {
      const double v = scaled(i, j) * stddev[j] + mean[j];
      out(i, j) = log10[j] ? std::pow(10.0, v) : v;
    }
  }
  return out;
}

}  // namespace molfuse
