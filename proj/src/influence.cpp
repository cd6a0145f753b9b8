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

#include "molfuse/influence.h"

#include <cmath>

#include "molfuse/error.h"
#include "molfuse/random.h"

namespace molfuse {

namespace {

double block_stddev(const Matrix& fused, const BlockInfo& b) {
  double mean = 0.0;
  for (std::size_t i = 0; i < fused.rows(); ++i) {
    for (std::size_t j = b.offset; j < b.offset + b.width; ++j) mean += fused(i, j);
  }
  const double n = static_cast<double>(fused.rows() * b.width);
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < fused.rows(); ++i) {
    for (std::size_t j = b.offset; j < b.offset + b.width; ++j) ss += (fused(i, j) - mean) * (fused(i, j) - mean);
  }
  return std::sqrt(ss / n);
}

}  // namespace

std::vector<double> scaled_rmse(const FusedModel& model, const Matrix& fused, const SparseTargets& raw_targets) {
  if (raw_targets.rows() != fused.rows()) throw Error(ErrorCode::kRowCountMismatch, "targets and rows differ");
  const SparseTargets scaled = model.scaler.transform(raw_targets);
  const Matrix pred = predict_scaled(model, fused);
  std::vector<double> out;
  for (std::size_t j = 0; j < scaled.tasks(); ++j) {
    double ss = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < scaled.rows(); ++i) {
      if (!scaled.present(i, j)) continue;
      const double r = pred(i, j) - scaled.values(i, j);
      ss += r * r;
      ++n;
    }
    if (n == 0) throw Error(ErrorCode::kNoPresentTargets, "task " + model.tasks[j] + " has no evaluation targets");
    out.push_back(std::sqrt(ss / static_cast<double>(n)));
  }
  return out;
}

InfluenceMatrix influence_matrix(const FusedModel& model, const Matrix& fused, const SparseTargets& raw_targets,
                                 double multiplier, std::uint64_t seed) {
  if (model.fusion.mode != FusionMode::kConcat) {
    throw Error(ErrorCode::kInvalidArgument, "influence analysis needs a concat-mode model");
  }
  if (!(multiplier >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise multiplier must be non-negative");
  const std::vector<double> clean = scaled_rmse(model, fused, raw_targets);

  InfluenceMatrix out;
  out.a = Matrix(model.layout.size(), model.tasks.size());
  out.multiplier = multiplier;
  out.seeds = {seed};
  out.tasks = model.tasks;
  for (std::size_t i = 0; i < model.layout.size(); ++i) {
    const BlockInfo& b = model.layout[i];
    out.blocks.push_back(b.label);
    const double scale = multiplier * block_stddev(fused, b);
    Matrix noised = fused;
    Rng rng(derive_seed(seed, {i}));
    for (std::size_t r = 0; r < noised.rows(); ++r) {
      for (std::size_t j = b.offset; j < b.offset + b.width; ++j) noised(r, j) += scale * rng.normal();
    }
    const std::vector<double> noisy = scaled_rmse(model, noised, raw_targets);
    for (std::size_t t = 0; t < clean.size(); ++t) {
      // Both zero only when the model is exact on every row and unaffected.
      out.a(i, t) = noisy[t] == 0.0 ? 1.0 : clean[t] / noisy[t];
    }
  }
  return out;
}

InfluenceMatrix influence_averaged(const FusedModel& model, const Matrix& fused, const SparseTargets& raw_targets,
                                   double multiplier, std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "at least one seed required");
  InfluenceMatrix out;
  for (std::uint64_t s : seeds) {
    InfluenceMatrix one = influence_matrix(model, fused, raw_targets, multiplier, s);
    if (out.seeds.empty()) {
      out = std::move(one);
      continue;
    }
    for (std::size_t k = 0; k < out.a.size(); ++k) out.a.values()[k] += one.a.values()[k];
    out.seeds.push_back(s);
  }
  for (double& v : out.a.values()) v /= static_cast<double>(seeds.size());
  return out;
}

}  // namespace molfuse
