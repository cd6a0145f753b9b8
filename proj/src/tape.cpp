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

#include "molfuse/tape.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "molfuse/error.h"

namespace molfuse {

namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw Error(ErrorCode::kShapeMismatch, std::string(op) + ": " + shape(a) + " vs " + shape(b));
}

// c += a * b
void gemm_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  const double* pa = a.values().data();
  const double* pb = b.values().data();
  double* pc = c.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = pc + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

// c += a * b^T
void gemm_bt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t n = a.rows(), m = a.cols(), k = b.rows();
  const double* pa = a.values().data();
  const double* pb = b.values().data();
  double* pc = c.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = pa + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = pb + p * m;
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += arow[j] * brow[j];
      pc[i * k + p] += s;
    }
  }
}

// c += a^T * b
void gemm_at_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  const double* pa = a.values().data();
  const double* pb = b.values().data();
  double* pc = c.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* brow = pb + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      double* crow = pc + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

void add_into(Matrix& dst, const Matrix& src) {
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

void check_segments(const std::vector<int>& ids, std::size_t rows, int n) {
  if (ids.size() != rows) throw Error(ErrorCode::kShapeMismatch, "segment ids do not match row count");
  for (int s : ids) {
    if (s < 0 || s >= n) throw Error(ErrorCode::kShapeMismatch, "segment id out of range");
  }
}

}  // namespace

Var Tape::push(Node n) {
  if (!n.value.all_finite()) throw Error(ErrorCode::kNonFiniteValue, "non-finite value in forward pass");
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::input(Matrix value) {
  Node n{NodeKind::kInput};
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
  Node n{NodeKind::kParameter};
  n.value = p.value;
  n.param = &p;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (va.cols() != vb.rows()) shape_error("matmul", va, vb);
  Node n{NodeKind::kMatmul, a.id, b.id};
  n.value = Matrix(va.rows(), vb.cols());
  gemm_acc(va, vb, n.value);
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

Var Tape::add_row(Var a, Var row) {
  const Matrix& va = value(a);
  const Matrix& vr = value(row);
  if (vr.rows() != 1 || vr.cols() != va.cols()) shape_error("add_broadcast_row", va, vr);
  Node n{NodeKind::kAddBroadcastRow, a.id, row.id};
  n.value = va;
  for (std::size_t i = 0; i < va.rows(); ++i) {
    auto r = n.value.row(i);
    for (std::size_t j = 0; j < va.cols(); ++j) r[j] += vr(0, j);
  }
  n.requires_grad = node(a).requires_grad || node(row).requires_grad;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (!va.same_shape(vb)) shape_error("add", va, vb);
  Node n{NodeKind::kAdd, a.id, b.id};
  n.value = va;
  add_into(n.value, vb);
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  Node n{NodeKind::kRelu, a.id};
  n.value = value(a);
  for (double& v : n.value.values()) v = v > 0.0 ? v : 0.0;
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::gather_rows(Var a, std::vector<int> indices) {
  const Matrix& va = value(a);
  Node n{NodeKind::kGatherRows, a.id};
  n.value = Matrix(indices.size(), va.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int src = indices[i];
    if (src < 0 || static_cast<std::size_t>(src) >= va.rows()) {
      throw Error(ErrorCode::kShapeMismatch, "gather index out of range");
    }
    std::copy(va.row(src).begin(), va.row(src).end(), n.value.row(i).begin());
  }
  n.index = std::move(indices);
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::segment_sum(Var a, std::vector<int> segment_ids, int n_segments) {
  const Matrix& va = value(a);
  check_segments(segment_ids, va.rows(), n_segments);
  Node n{NodeKind::kSegmentSum, a.id};
  n.value = Matrix(n_segments, va.cols());
  for (std::size_t i = 0; i < va.rows(); ++i) {
    auto dst = n.value.row(segment_ids[i]);
    auto src = va.row(i);
    for (std::size_t j = 0; j < va.cols(); ++j) dst[j] += src[j];
  }
  n.index = std::move(segment_ids);
  n.n = n_segments;
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::segment_mean(Var a, std::vector<int> segment_ids, int n_segments) {
  const Matrix& va = value(a);
  check_segments(segment_ids, va.rows(), n_segments);
  Node n{NodeKind::kSegmentMean, a.id};
  n.value = Matrix(n_segments, va.cols());
  n.aux = Matrix(n_segments, 1);
  for (int s : segment_ids) n.aux(s, 0) += 1.0;
  for (std::size_t i = 0; i < va.rows(); ++i) {
    auto dst = n.value.row(segment_ids[i]);
    auto src = va.row(i);
    for (std::size_t j = 0; j < va.cols(); ++j) dst[j] += src[j];
  }
  for (int s = 0; s < n_segments; ++s) {
    if (n.aux(s, 0) > 0.0) {
      for (double& v : n.value.row(s)) v /= n.aux(s, 0);
    }
  }
  n.index = std::move(segment_ids);
  n.n = n_segments;
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::row_mean(Var a) {
  const Matrix& va = value(a);
  if (va.rows() == 0) throw Error(ErrorCode::kShapeMismatch, "row_mean of an empty matrix");
  Node n{NodeKind::kRowMean, a.id};
  n.value = Matrix(1, va.cols());
  for (std::size_t i = 0; i < va.rows(); ++i) {
    for (std::size_t j = 0; j < va.cols(); ++j) n.value(0, j) += va(i, j);
  }
  for (double& v : n.value.values()) v /= static_cast<double>(va.rows());
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (va.rows() != vb.rows()) shape_error("concat_cols", va, vb);
  Node n{NodeKind::kConcatCols, a.id, b.id};
  const Matrix parts[2] = {va, vb};
  n.value = hconcat(parts);
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

Var Tape::dropout(Var a, double p) {
  if (p < 0.0 || p >= 1.0) throw Error(ErrorCode::kInvalidArgument, "dropout probability must be in [0, 1)");
  if (!training_ || p == 0.0) return a;
  const Matrix& va = value(a);
  Node n{NodeKind::kDropout, a.id};
  n.aux = Matrix(va.rows(), va.cols());
  const double keep = 1.0 - p;
  for (double& m : n.aux.values()) m = rng_.uniform() < keep ? 1.0 / keep : 0.0;
  n.value = va;
  for (std::size_t i = 0; i < va.size(); ++i) n.value.values()[i] *= n.aux.values()[i];
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::masked_mse(Var pred, const Matrix& target, const std::vector<std::uint8_t>& mask) {
  const Matrix& vp = value(pred);
  if (!vp.same_shape(target)) shape_error("masked_mse", vp, target);
  if (mask.size() != target.size()) throw Error(ErrorCode::kShapeMismatch, "mask size does not match targets");
  const std::size_t rows = vp.rows(), tasks = vp.cols();

  std::vector<double> count(tasks, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < tasks; ++j) count[j] += mask[i * tasks + j] ? 1.0 : 0.0;
  }
  const double active = static_cast<double>(std::count_if(count.begin(), count.end(), [](double c) { return c > 0; }));
  if (active == 0.0) throw Error(ErrorCode::kEmptyBatch, "no present targets in batch");

  // aux holds dLoss/dPred so backward is a single scale.
  Node n{NodeKind::kMaskedMse, pred.id};
  n.aux = Matrix(rows, tasks);
  std::vector<double> sse(tasks, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < tasks; ++j) {
      if (!mask[i * tasks + j]) continue;
      const double r = vp(i, j) - target(i, j);
      sse[j] += r * r;
      n.aux(i, j) = 2.0 * r / (count[j] * active);
    }
  }
  double loss = 0.0;
  for (std::size_t j = 0; j < tasks; ++j) {
    if (count[j] > 0) loss += sse[j] / count[j];
  }
  n.value = Matrix(1, 1, loss / active);
  n.requires_grad = node(pred).requires_grad;
  return push(std::move(n));
}

void Tape::backward(Var output) {
  const Matrix& out = value(output);
  if (out.rows() != 1 || out.cols() != 1) {
    throw Error(ErrorCode::kNotScalarOutput, "backward requires a 1x1 output, got " + shape(out));
  }
  std::vector<Matrix> grads(nodes_.size());
  grads[output.id] = Matrix(1, 1, 1.0);

  auto grad_of = [&](std::size_t id) -> Matrix& {
    if (grads[id].empty() && nodes_[id].value.size() > 0) {
      grads[id] = Matrix(nodes_[id].value.rows(), nodes_[id].value.cols());
    }
    return grads[id];
  };

  for (std::size_t k = output.id + 1; k-- > 0;) {
    Node& n = nodes_[k];
    if (!n.requires_grad || grads[k].empty()) continue;
    const Matrix& g = grads[k];
    switch (n.kind) {
      case NodeKind::kInput:
        break;
      case NodeKind::kParameter: {
        Parameter& p = *n.param;
        if (!p.grad.same_shape(p.value)) p.zero_grad();
        add_into(p.grad, g);
        break;
      }
      case NodeKind::kMatmul:
        if (nodes_[n.a].requires_grad) gemm_bt_acc(g, nodes_[n.b].value, grad_of(n.a));
        if (nodes_[n.b].requires_grad) gemm_at_acc(nodes_[n.a].value, g, grad_of(n.b));
        break;
      case NodeKind::kAddBroadcastRow:
        if (nodes_[n.a].requires_grad) add_into(grad_of(n.a), g);
        if (nodes_[n.b].requires_grad) {
          Matrix& gb = grad_of(n.b);
          for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
          }
        }
        break;
      case NodeKind::kAdd:
        if (nodes_[n.a].requires_grad) add_into(grad_of(n.a), g);
        if (nodes_[n.b].requires_grad) add_into(grad_of(n.b), g);
        break;
      case NodeKind::kRelu: {
        Matrix& ga = grad_of(n.a);
        const auto in = nodes_[n.a].value.values();
        for (std::size_t i = 0; i < in.size(); ++i) {
          if (in[i] > 0.0) ga.values()[i] += g.values()[i];
        }
        break;
      }
      case NodeKind::kGatherRows: {
        Matrix& ga = grad_of(n.a);
        for (std::size_t i = 0; i < n.index.size(); ++i) {
          auto dst = ga.row(n.index[i]);
          auto src = g.row(i);
          for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
        }
        break;
      }
      case NodeKind::kSegmentSum:
      case NodeKind::kSegmentMean: {
        Matrix& ga = grad_of(n.a);
        const bool mean = n.kind == NodeKind::kSegmentMean;
        for (std::size_t i = 0; i < n.index.size(); ++i) {
          const int s = n.index[i];
          const double scale = mean ? 1.0 / n.aux(s, 0) : 1.0;
          auto dst = ga.row(i);
          auto src = g.row(s);
          for (std::size_t j = 0; j < src.size(); ++j) dst[j] += scale * src[j];
        }
        break;
      }
      case NodeKind::kRowMean: {
        Matrix& ga = grad_of(n.a);
        const double scale = 1.0 / static_cast<double>(ga.rows());
        for (std::size_t i = 0; i < ga.rows(); ++i) {
          for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += scale * g(0, j);
        }
        break;
      }
      case NodeKind::kConcatCols: {
        const std::size_t left = nodes_[n.a].value.cols();
        if (nodes_[n.a].requires_grad) {
          Matrix& ga = grad_of(n.a);
          for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < left; ++j) ga(i, j) += g(i, j);
          }
        }
        if (nodes_[n.b].requires_grad) {
          Matrix& gb = grad_of(n.b);
          for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = left; j < g.cols(); ++j) gb(i, j - left) += g(i, j);
          }
        }
        break;
      }
      case NodeKind::kDropout: {
        Matrix& ga = grad_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga.values()[i] += g.values()[i] * n.aux.values()[i];
        break;
      }
      case NodeKind::kMaskedMse: {
        Matrix& ga = grad_of(n.a);
        const double up = g(0, 0);
        for (std::size_t i = 0; i < ga.size(); ++i) ga.values()[i] += up * n.aux.values()[i];
        break;
      }
    }
    grads[k] = Matrix();  // release as we go
  }
}

Matrix evaluate(const ExpressionBuilder& build) {
  Tape tape;
  return tape.value(build(tape));
}

std::vector<Matrix> gradients(const ExpressionBuilder& build, std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
  Tape tape;
  const Var out = build(tape);
  tape.backward(out);
  std::vector<Matrix> result;
  result.reserve(params.size());
  for (Parameter* p : params) result.push_back(p->grad);
  return result;
}

double finite_difference_check(const ExpressionBuilder& build, std::span<Parameter* const> params, double eps,
                               double gradient_offset) {
  if (eps <= 0.0) throw Error(ErrorCode::kInvalidArgument, "eps must be positive");
  const std::vector<Matrix> analytic = gradients(build, params);
  auto loss = [&]() { return evaluate(build)(0, 0); };

  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p]->value.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = loss();
      values[i] = saved - eps;
      const double down = loss();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[p].values()[i] + gradient_offset;
      const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace molfuse
