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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "molfuse/error.h"
#include "molfuse/fusion.h"
#include "molfuse/influence.h"
#include "molfuse/models.h"
#include "oracles.h"

namespace molfuse {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

std::vector<std::size_t> iota(std::size_t n, std::size_t start = 0) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), start);
  return v;
}

double frobenius_diff(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a.values()[k] - b.values()[k]) * (a.values()[k] - b.values()[k]);
  return std::sqrt(s);
}

TEST(FuseConcat, LayoutAndValues) {
  const std::vector<EmbeddingBlock> blocks{{"a", "ea", random_matrix(4, 2, 1)}, {"b", "eb", random_matrix(4, 3, 2)}};
  const FusedMatrix f = fuse_concat(blocks);
  ASSERT_EQ(f.values.rows(), 4u);
  ASSERT_EQ(f.values.cols(), 5u);
  EXPECT_EQ(f.layout[0], (BlockInfo{"a", 0, 2, "ea"}));
  EXPECT_EQ(f.layout[1], (BlockInfo{"b", 2, 3, "eb"}));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(f.values(i, 1), blocks[0].values(i, 1));
    EXPECT_EQ(f.values(i, 4), blocks[1].values(i, 2));
  }
  EXPECT_EQ(fuse_concat(std::span(blocks).first(1)).values, blocks[0].values);

  const std::vector<EmbeddingBlock> ragged{{"a", "", Matrix(4, 2)}, {"b", "", Matrix(3, 2)}};
  EXPECT_EQ(code_of([&] { fuse_concat(ragged); }), ErrorCode::kRowCountMismatch);
}

TEST(Pca, OptimalAgainstEigenOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix x = random_matrix(10, 6, 100 + seed);
    const Matrix centered = testing::center_columns(x);
    for (std::size_t n = 1; n <= 5; ++n) {
      const PCAModel m = pca_fit(x, n, iota(10));
      const Matrix recon = pca_reconstruct(m, pca_transform(m, x));
      EXPECT_NEAR(frobenius_diff(x, recon), testing::best_rank_error(centered, n), 1e-9) << seed << " " << n;
    }
  }
}

TEST(Pca, ComponentsOrthonormalAndVariancesSorted) {
  const Matrix x = random_matrix(30, 8, 3);
  const PCAModel m = pca_fit(x, 5, iota(30));
  for (std::size_t a = 0; a < 5; ++a) {
    for (std::size_t b = 0; b < 5; ++b) {
      double dot = 0.0;
      for (std::size_t j = 0; j < 8; ++j) dot += m.components(a, j) * m.components(b, j);
      EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-8);
    }
    if (a > 0) EXPECT_LE(m.explained_variance[a], m.explained_variance[a - 1]);
  }
  // Scores on the training rows have the explained variances as column variances.
  const Matrix z = pca_transform(m, x);
  for (std::size_t k = 0; k < 5; ++k) {
    double mean = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < 30; ++i) mean += z(i, k);
    mean /= 30.0;
    for (std::size_t i = 0; i < 30; ++i) ss += (z(i, k) - mean) * (z(i, k) - mean);
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(ss / 29.0, m.explained_variance[k], 1e-10);
  }
  // The eigen oracle agrees on the variances.
  const Matrix c = testing::center_columns(x);
  Matrix cov(8, 8);
  for (std::size_t p = 0; p < 8; ++p) {
    for (std::size_t q = 0; q < 8; ++q) {
      for (std::size_t i = 0; i < 30; ++i) cov(p, q) += c(i, p) * c(i, q) / 29.0;
    }
  }
  const testing::SymmetricEigen e = testing::jacobi_eigen(cov);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(m.explained_variance[k], e.values[k], 1e-10);
}

TEST(Pca, HandExamples) {
  const PCAModel line = pca_fit(Matrix{{0, 0}, {1, 1}, {2, 2}}, 1, iota(3));
  EXPECT_NEAR(line.components(0, 0), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(line.components(0, 1), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(line.explained_variance[0], 2.0 * 2.0 / 2.0, 1e-12);

  // Points on a plane in 4-D are recovered exactly by two components.
  Rng rng(4);
  Matrix plane(12, 4);
  for (std::size_t i = 0; i < 12; ++i) {
    const double s = rng.normal(), t = rng.normal();
    const double row[4] = {s + 1, 2 * s - t, t + 3, s + t};
    std::copy(row, row + 4, plane.row(i).begin());
  }
  const PCAModel pm = pca_fit(plane, 2, iota(12));
  EXPECT_LE(frobenius_diff(plane, pca_reconstruct(pm, pca_transform(pm, plane))), 1e-8);

  Matrix mean_row(1, 4);
  for (std::size_t j = 0; j < 4; ++j) mean_row(0, j) = pm.mean[j];
  const Matrix at_mean = pca_transform(pm, mean_row);
  for (double v : at_mean.values()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Pca, SignConventionLargestEntryPositive) {
  const PCAModel m = pca_fit(random_matrix(20, 5, 5), 4, iota(20));
  for (std::size_t k = 0; k < 4; ++k) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < 5; ++j) {
      if (std::abs(m.components(k, j)) > std::abs(m.components(k, arg))) arg = j;
    }
    EXPECT_GT(m.components(k, arg), 0.0);
  }
}

TEST(Pca, TransformIsAffineAndFinite) {
  const Matrix x = random_matrix(15, 5, 6);
  const PCAModel m = pca_fit(x, 3, iota(15));
  const Matrix a = random_matrix(1, 5, 7), b = random_matrix(1, 5, 8);
  Matrix mix(1, 5);
  const double alpha = 0.3;
  for (std::size_t j = 0; j < 5; ++j) mix(0, j) = alpha * a(0, j) + (1 - alpha) * b(0, j);
  const Matrix ta = pca_transform(m, a), tb = pca_transform(m, b), tm = pca_transform(m, mix);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(tm(0, k), alpha * ta(0, k) + (1 - alpha) * tb(0, k), 1e-12);

  Matrix far(1, 5, 1e6);
  EXPECT_TRUE(pca_transform(m, far).all_finite());
  EXPECT_EQ(code_of([&] { pca_transform(m, Matrix(2, 4)); }), ErrorCode::kWidthMismatch);
}

TEST(Pca, Errors) {
  Matrix rank2(10, 5);
  for (std::size_t i = 0; i < 10; ++i) {
    rank2(i, 0) = static_cast<double>(i);
    rank2(i, 1) = static_cast<double>(i * i);
    rank2(i, 2) = rank2(i, 0) + rank2(i, 1);
  }
  EXPECT_NO_THROW(pca_fit(rank2, 2, iota(10)));
  EXPECT_EQ(code_of([&] { pca_fit(rank2, 3, iota(10)); }), ErrorCode::kRankDeficiency);
  EXPECT_EQ(code_of([&] { pca_fit(random_matrix(4, 6, 9), 4, iota(4)); }), ErrorCode::kRankDeficiency);
  EXPECT_EQ(code_of([&] { pca_fit(random_matrix(4, 3, 9), 2, iota(3)); }), ErrorCode::kRowCountMismatch);
  EXPECT_EQ(code_of([&] { pca_fit(random_matrix(4, 3, 9), 0, iota(4)); }), ErrorCode::kInvalidArgument);
}

TEST(Pca, FoldHygiene) {
  const Matrix x = random_matrix(20, 4, 10);
  const std::vector<std::size_t> train = iota(15), test = iota(5, 15);
  const PCAModel clean = pca_fit(select_rows(x, train), 2, train);
  EXPECT_NO_THROW(assert_pca_excludes(clean, test));
  EXPECT_NO_THROW(assert_pca_within(clean, train));

  // Test rows injected into the fit are caught.
  const PCAModel leaky = pca_fit(x, 2, iota(20));
  EXPECT_EQ(code_of([&] { assert_pca_excludes(leaky, test); }), ErrorCode::kFoldLeakage);
  EXPECT_EQ(code_of([&] { assert_pca_within(leaky, train); }), ErrorCode::kFoldLeakage);
  EXPECT_EQ(code_of([&] { assert_pca_excludes(leaky, std::vector<std::size_t>{19}); }), ErrorCode::kFoldLeakage);
}

TEST(Cur, SingleNonzeroColumn) {
  Matrix x(6, 5);
  for (std::size_t i = 0; i < 6; ++i) x(i, 3) = static_cast<double>(i) + 1.0;
  const CURSelection s = cur_select(x, 1);
  EXPECT_EQ(s.columns, (std::vector<std::size_t>{3}));
  EXPECT_NEAR(s.leverage[3], 1.0, 1e-12);
  ASSERT_EQ(s.source_counts.size(), 1u);
  EXPECT_EQ(s.source_counts[0], (std::pair<std::string, std::size_t>{"all", 1}));
}

TEST(Cur, RankOneReconstructsExactly) {
  const Matrix u = random_matrix(10, 1, 11), v = random_matrix(1, 7, 12);
  Matrix x(10, 7);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 7; ++j) x(i, j) = u(i, 0) * v(0, j);
  }
  const CURSelection s = cur_select(x, 1, 1);
  EXPECT_LE(column_projection_error(x, s.columns), 1e-10);
  EXPECT_LE(testing::subset_projection_error(x, s.columns), 1e-10);
}

Matrix dominant_columns(std::uint64_t seed, std::vector<std::size_t> dominant) {
  Rng rng(seed);
  Matrix x(40, 12);
  for (double& v : x.values()) v = 1e-3 * rng.normal();
  for (std::size_t c : dominant) {
    for (std::size_t i = 0; i < 40; ++i) x(i, c) += 5.0 * rng.normal();
  }
  return x;
}

TEST(Cur, DominantColumnsMatchExhaustiveSearch) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::vector<std::size_t> dominant{seed % 12, (seed * 5 + 3) % 12, (seed * 7 + 8) % 12};
    const Matrix x = dominant_columns(seed, dominant);
    const CURSelection s = cur_select(x, 3, 3);
    std::vector<std::size_t> best;
    double best_err = 1e300;
    for (const auto& subset : testing::all_subsets(12, 3)) {
      const double e = testing::subset_projection_error(x, subset);
      if (e < best_err) {
        best_err = e;
        best = subset;
      }
    }
    std::vector<std::size_t> chosen = s.columns;
    std::sort(chosen.begin(), chosen.end());
    std::vector<std::size_t> expected = dominant;
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(chosen, best);
    EXPECT_EQ(chosen, expected);
    EXPECT_NEAR(column_projection_error(x, s.columns), best_err, 1e-9);
  }
}

TEST(Cur, LeverageAndCounts) {
  const Matrix x = random_matrix(25, 9, 13);
  const std::vector<BlockInfo> layout{{"p1", 0, 4, "e1"}, {"p2", 4, 2, "e2"}, {"p3", 6, 3, "e3"}};
  for (std::size_t k = 1; k <= 9; ++k) {
    const CURSelection s = cur_select(x, k, 0, layout);
    ASSERT_EQ(s.columns.size(), k);
    EXPECT_EQ(std::set<std::size_t>(s.columns.begin(), s.columns.end()).size(), k);
    std::size_t total = 0;
    for (const auto& [label, count] : s.source_counts) total += count;
    EXPECT_EQ(total, k);
    ASSERT_EQ(s.source_counts.size(), 3u);
    EXPECT_EQ(s.source_counts[1].first, "p2");
    // Leverage with r = k sums to one over all columns.
    EXPECT_NEAR(std::accumulate(s.leverage.begin(), s.leverage.end(), 0.0), 1.0, 1e-12);
    for (std::size_t i = 1; i < k; ++i) EXPECT_GE(s.leverage[s.columns[i - 1]], s.leverage[s.columns[i]]);
    const CURSelection again = cur_select(x, k, 0, layout);
    EXPECT_EQ(again.columns, s.columns);
    EXPECT_EQ(again.leverage, s.leverage);
  }
}

TEST(Cur, TiesGoToLowerIndex) {
  // Identical columns have identical leverage.
  Matrix x(5, 4);
  for (std::size_t i = 0; i < 5; ++i) x(i, 1) = x(i, 2) = x(i, 3) = static_cast<double>(i * i) - 2.0;
  const CURSelection s = cur_select(x, 2, 1);
  EXPECT_EQ(s.columns, (std::vector<std::size_t>{1, 2}));
}

TEST(Cur, LayoutMustCoverColumns) {
  const Matrix x = random_matrix(10, 6, 14);
  const std::vector<BlockInfo> short_layout{{"p1", 0, 4, ""}};
  EXPECT_EQ(code_of([&] { cur_select(x, 2, 0, short_layout); }), ErrorCode::kWidthMismatch);
  const std::vector<BlockInfo> gap{{"p1", 0, 3, ""}, {"p2", 4, 2, ""}};
  EXPECT_EQ(code_of([&] { cur_select(x, 2, 0, gap); }), ErrorCode::kWidthMismatch);
}

// Hand-built concat model whose task j reads block j linearly through a
// relu(s) - relu(-s) pair, so it is exactly blind to the other block.
FusedModel separable_model(const std::vector<std::vector<double>>& coef) {
  const std::size_t n_blocks = coef.size(), width = coef[0].size();
  FusedModel m;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    m.tasks.push_back("t" + std::to_string(b));
    m.layout.push_back({"p" + std::to_string(b), b * width, width, "e" + std::to_string(b)});
  }
  m.fusion = {FusionMode::kConcat, 0};
  m.ffn_config = {.n_layers = 1, .width = static_cast<int>(2 * n_blocks), .dropout = 0.0,
                  .output_dim = static_cast<int>(n_blocks)};
  Matrix w1(n_blocks * width, 2 * n_blocks), w2(2 * n_blocks, n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    for (std::size_t k = 0; k < width; ++k) {
      w1(b * width + k, 2 * b) = coef[b][k];
      w1(b * width + k, 2 * b + 1) = -coef[b][k];
    }
    w2(2 * b, b) = 1.0;
    w2(2 * b + 1, b) = -1.0;
  }
  m.ffn.layers = {Parameter("w0", w1), Parameter("b0", Matrix(1, 2 * n_blocks)), Parameter("w1", w2),
                  Parameter("b1", Matrix(1, n_blocks))};
  m.scaler = {std::vector<double>(n_blocks, 0.0), std::vector<double>(n_blocks, 1.0),
              std::vector<std::uint8_t>(n_blocks, 0)};
  return m;
}

struct SeparableData {
  FusedModel model;
  Matrix fused;
  SparseTargets targets;
};

SeparableData separable_data(std::uint64_t seed) {
  const std::vector<std::vector<double>> coef{{0.8, -0.5, 0.3}, {-0.4, 0.9, 0.6}};
  SeparableData d{separable_model(coef), random_matrix(200, 6, seed), {}};
  Rng rng(seed + 1);
  Matrix y(200, 2);
  for (std::size_t i = 0; i < 200; ++i) {
    for (std::size_t b = 0; b < 2; ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += coef[b][k] * d.fused(i, 3 * b + k);
      y(i, b) = s + 0.1 * rng.normal();
    }
  }
  d.targets = SparseTargets(y);
  return d;
}

TEST(Influence, ScaledRmseByHand) {
  SeparableData d = separable_data(20);
  d.model.scaler = {{1.0, -2.0}, {2.0, 0.5}, {0, 0}};
  const Matrix pred = predict(d.model, d.fused);
  const std::vector<double> rmse = scaled_rmse(d.model, d.fused, d.targets);
  for (std::size_t j = 0; j < 2; ++j) {
    double ss = 0.0;
    for (std::size_t i = 0; i < 200; ++i) {
      const double r = (pred(i, j) - d.targets.values(i, j)) / d.model.scaler.stddev[j];
      ss += r * r;
    }
    EXPECT_NEAR(rmse[j], std::sqrt(ss / 200.0), 1e-12);
  }
  SparseTargets empty = d.targets;
  for (std::size_t i = 0; i < 200; ++i) empty.mask[2 * i + 1] = 0;
  EXPECT_EQ(code_of([&] { scaled_rmse(d.model, d.fused, empty); }), ErrorCode::kNoPresentTargets);
}

TEST(Influence, ZeroMultiplierIsExactlyOne) {
  const SeparableData d = separable_data(21);
  const InfluenceMatrix m = influence_matrix(d.model, d.fused, d.targets, 0.0, 5);
  for (double v : m.a.values()) EXPECT_EQ(v, 1.0);
  const InfluenceMatrix tiny = influence_matrix(d.model, d.fused, d.targets, 1e-6, 5);
  for (double v : tiny.a.values()) EXPECT_NEAR(v, 1.0, 1e-4);
}

TEST(Influence, SeparableModelIsDiagonallyDominant) {
  const SeparableData d = separable_data(22);
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const InfluenceMatrix m = influence_averaged(d.model, d.fused, d.targets, 3.0, seeds);
  ASSERT_EQ(m.a.rows(), 2u);
  ASSERT_EQ(m.a.cols(), 2u);
  EXPECT_EQ(m.blocks, (std::vector<std::string>{"p0", "p1"}));
  EXPECT_EQ(m.seeds, seeds);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_GT(m.a(i, j), 0.0);
      if (i == j) {
        EXPECT_LE(m.a(i, j), 0.8);
      } else {
        EXPECT_GE(m.a(i, j), 0.95);
      }
    }
  }
}

TEST(Influence, DeterministicPerSeedAndRequiresConcat) {
  const SeparableData d = separable_data(23);
  EXPECT_EQ(influence_matrix(d.model, d.fused, d.targets, 3.0, 9).a,
            influence_matrix(d.model, d.fused, d.targets, 3.0, 9).a);
  EXPECT_NE(influence_matrix(d.model, d.fused, d.targets, 3.0, 9).a,
            influence_matrix(d.model, d.fused, d.targets, 3.0, 10).a);
  FusedModel pca_model = d.model;
  pca_model.fusion = {FusionMode::kPca, 2};
  EXPECT_EQ(code_of([&] { influence_matrix(pca_model, d.fused, d.targets, 3.0, 9); }),
            ErrorCode::kInvalidArgument);
}

TEST(Influence, TrainedModelLearnsSeparableStructure) {
  const SeparableData d = separable_data(24);
  const FusedMatrix fused{d.fused, d.model.layout};
  const std::vector<std::size_t> rows = iota(150);
  const FusedTrainResult r =
      train_fused({select_rows(fused.values, rows), fused.layout}, rows, select_rows(d.targets, rows),
                  d.model.tasks, {0, 0}, {FusionMode::kConcat, 0}, std::nullopt, {.n_layers = 1, .width = 32},
                  {.epochs = 200, .batch_size = 32, .seed = 3});
  const std::vector<std::size_t> test = iota(50, 150);
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const InfluenceMatrix m =
      influence_averaged(r.model, select_rows(d.fused, test), select_rows(d.targets, test), 3.0, seeds);
  EXPECT_LE(m.a(0, 0), 0.8);
  EXPECT_LE(m.a(1, 1), 0.8);
  EXPECT_GT(m.a(0, 1), m.a(0, 0));
  EXPECT_GT(m.a(1, 0), m.a(1, 1));
}

}  // namespace
}  // namespace molfuse
