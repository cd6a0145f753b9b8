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

#include "molfuse/fusion.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "molfuse/error.h"

namespace molfuse {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> view(const Matrix& m) {
  return {m.values().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
  }
  return m;
}

int numerical_rank(const Eigen::VectorXd& s, Eigen::Index rows, Eigen::Index cols) {
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double tol = static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * s(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol) ++rank;
  }
  return rank;
}

}  // namespace

FusedMatrix fuse_concat(std::span<const EmbeddingBlock> blocks) {
  FusedMatrix out;
  std::vector<Matrix> values;
  values.reserve(blocks.size());
  std::size_t offset = 0;
  for (const EmbeddingBlock& b : blocks) {
    out.layout.push_back({b.label, offset, b.values.cols(), b.provenance});
    offset += b.values.cols();
    values.push_back(b.values);
  }
  out.values = hconcat(values);
  return out;
}

PCAModel pca_fit(const Matrix& train, std::size_t n_components, std::span<const std::size_t> row_ids) {
  if (n_components == 0) throw Error(ErrorCode::kInvalidArgument, "pca needs at least one component");
  if (row_ids.size() != train.rows()) {
    throw Error(ErrorCode::kRowCountMismatch, "row ids do not match the training matrix");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(train.rows());
  const Eigen::Index d = static_cast<Eigen::Index>(train.cols());
  if (n < 2) throw Error(ErrorCode::kRankDeficiency, "pca needs at least two rows");

  const Eigen::RowVectorXd mean = view(train).colwise().mean();
  const Eigen::MatrixXd centered = view(train).rowwise() - mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  if (static_cast<int>(n_components) > numerical_rank(s, n, d)) {
    throw Error(ErrorCode::kRankDeficiency, "requested components exceed the numerical rank");
  }

  PCAModel model;
  model.mean.assign(mean.data(), mean.data() + d);
  model.components = Matrix(n_components, static_cast<std::size_t>(d));
  for (std::size_t c = 0; c < n_components; ++c) {
    const Eigen::VectorXd v = svd.matrixV().col(static_cast<Eigen::Index>(c));
    Eigen::Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    const double sign = v(pivot) < 0.0 ? -1.0 : 1.0;
    for (Eigen::Index j = 0; j < d; ++j) model.components(c, static_cast<std::size_t>(j)) = sign * v(j);
    const double sv = s(static_cast<Eigen::Index>(c));
    model.explained_variance.push_back(sv * sv / static_cast<double>(n - 1));
  }
  model.provenance_rows.assign(row_ids.begin(), row_ids.end());
  std::sort(model.provenance_rows.begin(), model.provenance_rows.end());
  return model;
}

Matrix pca_transform(const PCAModel& model, const Matrix& x) {
  if (x.cols() != model.input_dim()) {
    throw Error(ErrorCode::kWidthMismatch, "input width " + std::to_string(x.cols()) + " but model expects " +
                                               std::to_string(model.input_dim()));
  }
  const Eigen::Map<const Eigen::RowVectorXd> mean(model.mean.data(), static_cast<Eigen::Index>(model.mean.size()));
  const Eigen::MatrixXd z = (view(x).rowwise() - mean) * view(model.components).transpose();
  return from_eigen(z);
}

Matrix pca_reconstruct(const PCAModel& model, const Matrix& z) {
  if (z.cols() != model.n_components()) throw Error(ErrorCode::kWidthMismatch, "score width does not match model");
  const Eigen::Map<const Eigen::RowVectorXd> mean(model.mean.data(), static_cast<Eigen::Index>(model.mean.size()));
  const Eigen::MatrixXd x = (view(z) * view(model.components)).rowwise() + mean;
  return from_eigen(x);
}

void assert_pca_excludes(const PCAModel& model, std::span<const std::size_t> rows) {
  for (std::size_t r : rows) {
    if (std::binary_search(model.provenance_rows.begin(), model.provenance_rows.end(), r)) {
      throw Error(ErrorCode::kFoldLeakage, "row " + std::to_string(r) + " was used to fit the pca model");
    }
  }
}

void assert_pca_within(const PCAModel& model, std::span<const std::size_t> training_rows) {
  std::vector<std::size_t> allowed(training_rows.begin(), training_rows.end());
  std::sort(allowed.begin(), allowed.end());
  for (std::size_t r : model.provenance_rows) {
    if (!std::binary_search(allowed.begin(), allowed.end(), r)) {
      throw Error(ErrorCode::kFoldLeakage, "pca model was fitted on row " + std::to_string(r) +
                                               " outside the training set");
    }
  }
}

CURSelection cur_select(const Matrix& x, std::size_t k, std::size_t r, std::span<const BlockInfo> layout) {
  const std::size_t d = x.cols();
  if (r == 0) r = k;
  if (k == 0 || k > d) throw Error(ErrorCode::kInvalidArgument, "cur k must be in [1, columns]");
  if (r > std::min(x.rows(), d)) throw Error(ErrorCode::kInvalidArgument, "cur rank exceeds min(rows, columns)");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(view(x)), Eigen::ComputeThinV);
  CURSelection out;
  out.leverage.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t c = 0; c < r; ++c) {
      const double v = svd.matrixV()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
      sum += v * v;
    }
    out.leverage[j] = sum / static_cast<double>(r);
  }

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out.leverage[a] > out.leverage[b]; });
  out.columns.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));

  if (layout.empty()) {
    out.source_counts.emplace_back("all", k);
    return out;
  }
  std::size_t covered = 0;
  for (const BlockInfo& b : layout) {
    if (b.offset != covered) throw Error(ErrorCode::kWidthMismatch, "layout blocks are not contiguous");
    covered += b.width;
  }
  if (covered != d) throw Error(ErrorCode::kWidthMismatch, "layout does not cover every column");
  for (const BlockInfo& b : layout) {
    std::size_t count = 0;
    for (std::size_t c : out.columns) {
      if (c >= b.offset && c < b.offset + b.width) ++count;
    }
    out.source_counts.emplace_back(b.label, count);
  }
  return out;
}

double column_projection_error(const Matrix& x, std::span<const std::size_t> columns) {
  const auto full = view(x);
  Eigen::MatrixXd c(full.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i) c.col(static_cast<Eigen::Index>(i)) = full.col(columns[i]);
  const Eigen::MatrixXd target(full);
  const Eigen::MatrixXd coeffs = c.colPivHouseholderQr().solve(target);
  return (target - c * coeffs).norm();
}

}  // namespace molfuse
