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

#ifndef MOLFUSE_TAPE_H_
#define MOLFUSE_TAPE_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "molfuse/matrix.h"
#include "molfuse/random.h"

namespace molfuse {

//! Trainable matrix with its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad = Matrix(value.rows(), value.cols()); }
};

//! Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

enum class NodeKind {
  kInput,
  kParameter,
  kMatmul,
  kAddBroadcastRow,
  kAdd,
  kRelu,
  kGatherRows,
  kSegmentSum,
  kSegmentMean,
  kRowMean,
  kConcatCols,
  kDropout,
  kMaskedMse,
};

//! Define-by-run record of a computation over dense matrices. Forward values
//! are computed (and shape/finiteness checked) as nodes are added; backward()
//! runs reverse mode from a 1x1 output and accumulates into Parameter::grad.
//!
//! Reductions always run in a fixed serial order, so identical inputs give
//! bit-identical values and gradients.
class Tape {
 public:
  //! In evaluation mode dropout is the identity.
  explicit Tape(bool training = false, std::uint64_t dropout_seed = 0)
      : training_(training), rng_(dropout_seed) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var input(Matrix value);
  Var parameter(Parameter& p);

  Var matmul(Var a, Var b);
  //! a (n x m) + row (1 x m), broadcast over rows.
  Var add_row(Var a, Var row);
  Var add(Var a, Var b);
  Var relu(Var a);
  //! out[i] = a[indices[i]].
  Var gather_rows(Var a, std::vector<int> indices);
  //! out[s] = sum of a[i] with segment_ids[i] == s; empty segments are zero.
  Var segment_sum(Var a, std::vector<int> segment_ids, int n_segments);
  //! Like segment_sum but divided by the segment size (empty segments zero).
  Var segment_mean(Var a, std::vector<int> segment_ids, int n_segments);
  //! 1 x cols mean over rows.
  Var row_mean(Var a);
  Var concat_cols(Var a, Var b);
  //! Inverted dropout: kept units are scaled by 1 / (1 - p).
  Var dropout(Var a, double p);
  //! Mean over tasks (columns with at least one present entry) of the
  //! per-task mean squared error over present entries. Throws EmptyBatch.
  Var masked_mse(Var pred, const Matrix& target, const std::vector<std::uint8_t>& mask);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  NodeKind kind(Var v) const { return nodes_[v.id].kind; }
  std::size_t size() const { return nodes_.size(); }
  bool training() const { return training_; }

  //! Reverse pass from a 1x1 node. Throws NotScalarOutput otherwise.
  void backward(Var output);

 private:
  struct Node {
    NodeKind kind;
    std::size_t a = 0;
    std::size_t b = 0;
    Matrix value;
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::vector<int> index;
    int n = 0;
    Matrix aux;                       // dropout scale mask, or masked_mse residual weights
  };

  Var push(Node node);
  Node& node(Var v) { return nodes_[v.id]; }

  bool training_;
  Rng rng_;
  std::vector<Node> nodes_;
};

//! Builds an expression on the given tape and returns its scalar output.
using ExpressionBuilder = std::function<Var(Tape&)>;

//! Forward pass only; returns the output value.
Matrix evaluate(const ExpressionBuilder& build);

//! Zeroes the parameters' gradients, runs forward and backward, and returns
//! a copy of each gradient in order.
std::vector<Matrix> gradients(const ExpressionBuilder& build, std::span<Parameter* const> params);

//! Compares analytic gradients against central differences, entry by entry.
//! Relative error per entry is |a - f| / max(1e-8, |a| + |f|); returns the
//! maximum. `gradient_offset` is added to every analytic entry (fault
//! injection for testing the checker itself).
double finite_difference_check(const ExpressionBuilder& build, std::span<Parameter* const> params, double eps,
                               double gradient_offset = 0.0);

}  // namespace molfuse

#endif  // MOLFUSE_TAPE_H_
