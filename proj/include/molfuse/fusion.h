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

#ifndef MOLFUSE_FUSION_H_
#define MOLFUSE_FUSION_H_

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "molfuse/matrix.h"

namespace molfuse {

//! One property's embedding columns inside a fused matrix.
struct BlockInfo {
  std::string label;
  std::size_t offset = 0;
  std::size_t width = 0;
  std::string provenance;  // id of the encoder that produced the block

  bool operator==(const BlockInfo&) const = default;
};

struct EmbeddingBlock {
  std::string label;
  std::string provenance;
  Matrix values;  // n_molecules x h
};

struct FusedMatrix {
  Matrix values;
  std::vector<BlockInfo> layout;
};

//! Column-wise concatenation in the given order. Throws RowCountMismatch.
FusedMatrix fuse_concat(std::span<const EmbeddingBlock> blocks);

struct PCAModel {
  std::vector<double> mean;                 // length D
  Matrix components;                        // n x D, orthonormal rows
  std::vector<double> explained_variance;   // length n, non-increasing
  std::vector<std::size_t> provenance_rows;  // sorted ids of the rows it was fitted on

  std::size_t n_components() const { return components.rows(); }
  std::size_t input_dim() const { return mean.size(); }
};

//! Centered thin SVD of `train`. Explained variances are s^2 / (rows - 1).
//! Each component's largest-magnitude entry is made positive. Throws
//! RankDeficiency when n_components exceeds the numerical rank of the
//! centered data.
PCAModel pca_fit(const Matrix& train, std::size_t n_components, std::span<const std::size_t> row_ids);

//! (X - mean) * components^T. Throws WidthMismatch.
Matrix pca_transform(const PCAModel& model, const Matrix& x);

//! Z * components + mean.
Matrix pca_reconstruct(const PCAModel& model, const Matrix& z);

//! Throws FoldLeakage if any of `rows` took part in fitting `model`.
void assert_pca_excludes(const PCAModel& model, std::span<const std::size_t> rows);

//! Throws FoldLeakage unless every fitting row is among `training_rows`.
void assert_pca_within(const PCAModel& model, std::span<const std::size_t> training_rows);

struct CURSelection {
  std::vector<std::size_t> columns;  // in selection order (highest leverage first)
  std::vector<double> leverage;      // length D
  std::vector<std::pair<std::string, std::size_t>> source_counts;  // follows the layout order
};

//! Leverage of column j is (1/r) * sum over the top-r right singular vectors
//! v of v[j]^2; the k highest scores are kept, ties to the lower index.
//! r = 0 means r = k. Without a layout all columns count toward one source
//! labelled "all".
CURSelection cur_select(const Matrix& x, std::size_t k = 50, std::size_t r = 0,
                        std::span<const BlockInfo> layout = {});

//! Frobenius norm of X - P X where P projects onto span of the chosen columns.
double column_projection_error(const Matrix& x, std::span<const std::size_t> columns);

}  // namespace molfuse

#endif  // MOLFUSE_FUSION_H_
