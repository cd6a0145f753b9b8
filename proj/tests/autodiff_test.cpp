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

#include <cmath>
#include <vector>

#include "molfuse/adam.h"
#include "molfuse/dmpnn.h"
#include "molfuse/error.h"
#include "molfuse/ffn.h"
#include "molfuse/molgraph.h"
#include "molfuse/random.h"
#include "molfuse/tape.h"

namespace molfuse {
namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double margin = 0.0) {
  Matrix m(r, c);
  for (double& v : m.values()) {
    // Keep entries away from zero so relu kinks stay outside the FD stencil.
    const double u = rng.uniform(-1.0, 1.0);
    v = u + (u < 0 ? -margin : margin);
  }
  return m;
}

// Reduces any matrix to a scalar through a fixed random weighting.
Var weighted_sum(Tape& tape, Var x, const Matrix& column) {
  return tape.matmul(tape.row_mean(x), tape.input(column));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

TEST(Evaluate, Examples) {
  const Matrix relu = evaluate([](Tape& t) { return t.relu(t.input(Matrix{{-1, 2}})); });
  EXPECT_EQ(relu, (Matrix{{0, 2}}));

  const Matrix a{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(evaluate([&](Tape& t) { return t.matmul(t.input(Matrix::identity(2)), t.input(a)); }), a);

  const Matrix seg = evaluate([](Tape& t) { return t.segment_sum(t.input(Matrix{{1}, {2}, {3}}), {0, 0, 1}, 2); });
  EXPECT_EQ(seg, (Matrix{{3}, {3}}));
}

TEST(Evaluate, SegmentOpsHandleEmptySegments) {
  const Matrix x{{1, 2}, {3, 4}, {5, 6}};
  const Matrix sum = evaluate([&](Tape& t) { return t.segment_sum(t.input(x), {2, 2, 0}, 4); });
  EXPECT_EQ(sum, (Matrix{{5, 6}, {0, 0}, {4, 6}, {0, 0}}));
  const Matrix mean = evaluate([&](Tape& t) { return t.segment_mean(t.input(x), {2, 2, 0}, 3); });
  EXPECT_EQ(mean, (Matrix{{5, 6}, {0, 0}, {2, 3}}));
}

TEST(Evaluate, ShapeErrors) {
  EXPECT_EQ(code_of([] { evaluate([](Tape& t) { return t.matmul(t.input(Matrix(2, 3)), t.input(Matrix(2, 3))); }); }),
            ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of([] { evaluate([](Tape& t) { return t.add(t.input(Matrix(2, 3)), t.input(Matrix(3, 2))); }); }),
            ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of([] { evaluate([](Tape& t) { return t.add_row(t.input(Matrix(2, 3)), t.input(Matrix(1, 2))); }); }),
            ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of([] { evaluate([](Tape& t) { return t.segment_sum(t.input(Matrix(2, 1)), {0}, 1); }); }),
            ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of([] { evaluate([](Tape& t) { return t.gather_rows(t.input(Matrix(2, 1)), {2}); }); }),
            ErrorCode::kShapeMismatch);
}

TEST(Evaluate, NonFiniteInputIsRejected) {
  Matrix bad(1, 2);
  bad(0, 1) = std::nan("");
  EXPECT_EQ(code_of([&] { evaluate([&](Tape& t) { return t.relu(t.input(bad)); }); }), ErrorCode::kNonFiniteValue);
}

TEST(Gradients, BackwardRequiresScalar) {
  Tape tape;
  const Var v = tape.input(Matrix(2, 2));
  EXPECT_EQ(code_of([&] { tape.backward(v); }), ErrorCode::kNotScalarOutput);
}

TEST(Gradients, MseOfIdenticalValuesIsFlat) {
  Rng rng(1);
  Parameter x("x", random_matrix(3, 2, rng));
  std::vector<Parameter*> params{&x};
  const auto g = gradients(
      [&](Tape& t) {
        const Var v = t.parameter(x);
        return t.masked_mse(v, x.value, std::vector<std::uint8_t>(6, 1));
      },
      params);
  EXPECT_EQ(g[0], Matrix(3, 2));
}

TEST(Gradients, NegativeReluBlocksGradient) {
  Parameter w("w", Matrix{{-2.0, 3.0}});
  std::vector<Parameter*> params{&w};
  const auto g = gradients(
      [&](Tape& t) { return t.matmul(t.relu(t.parameter(w)), t.input(Matrix{{1.0}, {1.0}})); }, params);
  EXPECT_EQ(g[0](0, 0), 0.0);
  EXPECT_EQ(g[0](0, 1), 1.0);
}

TEST(Gradients, LinearMeanMatchesClosedForm) {
  // loss = mean(x W) over an n x m output; dL/dW[i][j] = colsum(x)[i] / (n m).
  Rng rng(2);
  const Matrix x = random_matrix(4, 3, rng);
  Parameter w("w", random_matrix(3, 2, rng));
  std::vector<Parameter*> params{&w};
  auto build = [&](Tape& t) {
    return t.matmul(t.row_mean(t.matmul(t.input(x), t.parameter(w))), t.input(Matrix{{0.5}, {0.5}}));
  };
  const auto g = gradients(build, params);
  for (std::size_t i = 0; i < 3; ++i) {
    double col = 0.0;
    for (std::size_t r = 0; r < 4; ++r) col += x(r, i);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(g[0](i, j), col / 8.0, 1e-15);
  }
  EXPECT_LE(finite_difference_check(build, params, 1e-5), 1e-6);
}

class NodeGradient : public ::testing::TestWithParam<int> {};

TEST_P(NodeGradient, MatchesCentralDifferences) {
  Rng rng(100 + GetParam());
  Parameter a("a", random_matrix(5, 4, rng, 0.05));
  Parameter b("b", random_matrix(4, 3, rng, 0.05));
  Parameter row("row", random_matrix(1, 4, rng, 0.05));
  Parameter c("c", random_matrix(5, 4, rng, 0.05));
  const Matrix reduce4 = random_matrix(4, 1, rng);
  const Matrix reduce3 = random_matrix(3, 1, rng);
  const Matrix reduce8 = random_matrix(8, 1, rng);
  Matrix target = random_matrix(5, 4, rng);
  std::vector<std::uint8_t> mask(20, 1);
  mask[1] = mask[6] = mask[11] = mask[16] = 0;  // column 1 fully absent
  mask[3] = 0;

  std::vector<Parameter*> params;
  ExpressionBuilder build;
  switch (GetParam()) {
    case 0:
      params = {&a, &b};
      build = [&](Tape& t) { return weighted_sum(t, t.matmul(t.parameter(a), t.parameter(b)), reduce3); };
      break;
    case 1:
      params = {&a, &row};
      build = [&](Tape& t) { return weighted_sum(t, t.add_row(t.parameter(a), t.parameter(row)), reduce4); };
      break;
    case 2:
      params = {&a, &c};
      build = [&](Tape& t) { return weighted_sum(t, t.add(t.parameter(a), t.parameter(c)), reduce4); };
      break;
    case 3:
      params = {&a};
      build = [&](Tape& t) { return weighted_sum(t, t.relu(t.parameter(a)), reduce4); };
      break;
    case 4:
      params = {&a};
      build = [&](Tape& t) { return weighted_sum(t, t.gather_rows(t.parameter(a), {4, 0, 0, 2, 4, 4}), reduce4); };
      break;
    case 5:
      params = {&a};
      build = [&](Tape& t) { return weighted_sum(t, t.segment_sum(t.parameter(a), {1, 0, 1, 3, 1}, 4), reduce4); };
      break;
    case 6:
      params = {&a};
      build = [&](Tape& t) { return weighted_sum(t, t.segment_mean(t.parameter(a), {1, 0, 1, 3, 1}, 4), reduce4); };
      break;
    case 7:
      params = {&a, &c};
      build = [&](Tape& t) { return weighted_sum(t, t.concat_cols(t.parameter(a), t.parameter(c)), reduce8); };
      break;
    case 8:
      params = {&a};
      build = [&](Tape& t) { return t.masked_mse(t.parameter(a), target, mask); };
      break;
    default:
      params = {&a, &b, &row};
      build = [&](Tape& t) {
        const Var h = t.relu(t.add_row(t.parameter(a), t.parameter(row)));
        return t.masked_mse(t.matmul(h, t.parameter(b)), Matrix(5, 3, 0.25), std::vector<std::uint8_t>(15, 1));
      };
  }
  EXPECT_LE(finite_difference_check(build, params, 1e-5), 1e-6);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, NodeGradient, ::testing::Range(0, 10));

TEST(Gradients, DropoutMatchesCentralDifferences) {
  // The FD helpers run in evaluation mode, so build the training-mode check by hand.
  Rng rng(7);
  Parameter a("a", random_matrix(6, 5, rng, 0.05));
  const Matrix reduce = random_matrix(5, 1, rng);
  auto loss = [&](bool backward) {
    Tape t(true, 99);
    const Var out = weighted_sum(t, t.dropout(t.relu(t.parameter(a)), 0.4), reduce);
    if (backward) {
      a.zero_grad();
      t.backward(out);
    }
    return t.value(out)(0, 0);
  };
  loss(true);
  const Matrix analytic = a.grad;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.value.size(); ++i) {
    const double saved = a.value.values()[i];
    a.value.values()[i] = saved + 1e-5;
    const double up = loss(false);
    a.value.values()[i] = saved - 1e-5;
    const double down = loss(false);
    a.value.values()[i] = saved;
    const double numeric = (up - down) / 2e-5;
    const double x = analytic.values()[i];
    worst = std::max(worst, std::abs(x - numeric) / std::max(1e-8, std::abs(x) + std::abs(numeric)));
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Dropout, EvaluationModeIsIdentity) {
  Rng rng(3);
  const Matrix x = random_matrix(4, 7, rng);
  EXPECT_EQ(evaluate([&](Tape& t) { return t.dropout(t.input(x), 0.5); }), x);
}

TEST(Dropout, TrainingModeIsSeededAndInverted) {
  const Matrix x(50, 40, 1.0);
  auto run = [&](std::uint64_t seed) {
    Tape t(true, seed);
    return t.value(t.dropout(t.input(x), 0.25));
  };
  const Matrix m1 = run(5);
  EXPECT_EQ(m1, run(5));
  EXPECT_NE(m1, run(6));
  std::size_t kept = 0;
  for (double v : m1.values()) {
    ASSERT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-15) << v;
    kept += v != 0.0;
  }
  const double frac = static_cast<double>(kept) / x.size();
  EXPECT_NEAR(frac, 0.75, 0.05);
}

TEST(FiniteDifference, AffineIsExact) {
  Rng rng(4);
  const Matrix x = random_matrix(3, 4, rng);
  Parameter w("w", random_matrix(4, 2, rng));
  Parameter bias("bias", random_matrix(1, 2, rng));
  std::vector<Parameter*> params{&w, &bias};
  auto build = [&](Tape& t) {
    return weighted_sum(t, t.add_row(t.matmul(t.input(x), t.parameter(w)), t.parameter(bias)), Matrix{{1.5}, {-2.0}});
  };
  EXPECT_LE(finite_difference_check(build, params, 1e-5), 1e-7);
}

TEST(FiniteDifference, DetectsCorruptedGradient) {
  Rng rng(5);
  const Matrix x = random_matrix(3, 4, rng);
  Parameter w("w", random_matrix(4, 2, rng));
  std::vector<Parameter*> params{&w};
  auto build = [&](Tape& t) { return weighted_sum(t, t.matmul(t.input(x), t.parameter(w)), Matrix{{1.0}, {1.0}}); };
  EXPECT_GT(finite_difference_check(build, params, 1e-5, 0.1), 1e-2);
}

TEST(FiniteDifference, EncoderAndHeadOnFiveAtomMolecule) {
  const PreparedMolecule mol = prepare_molecule(parse_smiles("CC(=O)NO"));
  ASSERT_EQ(mol.atom_features.rows(), 5u);
  const PreparedMolecule* ptr = &mol;
  const MolBatch batch = make_batch(std::span<const PreparedMolecule* const>(&ptr, 1));
  EncoderWeights enc = init_encoder({.hidden_size = 6, .depth = 3, .seed = 21});
  const FFNConfig ffn_config{.n_layers = 1, .width = 5, .dropout = 0.0, .output_dim = 2};
  FFNWeights ffn = init_ffn(ffn_config, 6, 22);
  Rng rng(23);
  for (Parameter* p : enc.parameters()) {
    if (p->value.rows() == 1) p->value = random_matrix(1, p->value.cols(), rng);
  }
  std::vector<Parameter*> params = enc.parameters();
  for (Parameter* p : ffn.parameters()) params.push_back(p);
  const Matrix target{{0.3, -0.7}};
  auto build = [&](Tape& t) {
    const EncoderOutput out = encode_on_tape(t, batch, enc, 3);
    return t.masked_mse(ffn_on_tape(t, out.embeddings, ffn, ffn_config), target, {1, 1});
  };
  EXPECT_LE(finite_difference_check(build, params, 1e-4), 1e-4);
}

TEST(Determinism, RepeatedPassesAreBitIdentical) {
  Rng rng(6);
  const Matrix x = random_matrix(8, 4, rng);
  Parameter w("w", random_matrix(4, 3, rng));
  std::vector<Parameter*> params{&w};
  auto build = [&](Tape& t) {
    return t.masked_mse(t.relu(t.matmul(t.input(x), t.parameter(w))), Matrix(8, 3, 0.1),
                        std::vector<std::uint8_t>(24, 1));
  };
  const auto g1 = gradients(build, params);
  const auto g2 = gradients(build, params);
  EXPECT_EQ(g1, g2);
  EXPECT_EQ(evaluate(build), evaluate(build));
}

TEST(Adam, ZeroGradientLeavesParameterAndDecaysMoments) {
  Parameter p("p", Matrix{{1.0, -2.0}});
  std::vector<Parameter*> params{&p};
  AdamState state = make_adam_state(params);
  state.first_moment[0] = Matrix{{0.5, 0.5}};
  state.second_moment[0] = Matrix{{0.25, 0.25}};
  p.zero_grad();
  const Matrix before = p.value;
  adam_step(params, state);
  EXPECT_EQ(state.step, 1);
  EXPECT_DOUBLE_EQ(state.first_moment[0](0, 0), 0.45);
  EXPECT_DOUBLE_EQ(state.second_moment[0](0, 0), 0.25 * 0.999);
  // Non-zero moments still move parameters; with fresh state they do not.
  Parameter q("q", Matrix{{1.0, -2.0}});
  std::vector<Parameter*> qs{&q};
  AdamState fresh = make_adam_state(qs);
  q.zero_grad();
  adam_step(qs, fresh);
  EXPECT_EQ(q.value, before);
  EXPECT_EQ(fresh.first_moment[0], Matrix(1, 2));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter p("p", Matrix{{3.0}});
  std::vector<Parameter*> params{&p};
  AdamState state = make_adam_state(params, {.lr = 0.1});
  p.grad = Matrix{{1.0}};
  adam_step(params, state);
  // m_hat = g, v_hat = g^2, step = lr g / (|g| + eps).
  EXPECT_NEAR(p.value(0, 0), 3.0 - 0.1 / (1.0 + 1e-8), 1e-12);
}

TEST(Adam, OppositeGradientsAccumulateSecondMoment) {
  Parameter p("p", Matrix{{0.0}});
  std::vector<Parameter*> params{&p};
  AdamState state = make_adam_state(params);
  p.grad = Matrix{{1.0}};
  adam_step(params, state);
  p.grad = Matrix{{-1.0}};
  adam_step(params, state);
  EXPECT_GT(state.second_moment[0](0, 0), 0.0);
  EXPECT_EQ(state.step, 2);
}

TEST(Adam, ShapeMismatchIsRejected) {
  Parameter p("p", Matrix(2, 2));
  std::vector<Parameter*> params{&p};
  AdamState state = make_adam_state(params);
  p.grad = Matrix(1, 2);
  EXPECT_EQ(code_of([&] { adam_step(params, state); }), ErrorCode::kShapeMismatch);
}

TEST(Adam, MatchesReferenceRecurrence) {
  Rng rng(8);
  Parameter p("p", random_matrix(2, 3, rng));
  std::vector<Parameter*> params{&p};
  AdamState state = make_adam_state(params, {.lr = 0.01});
  std::vector<double> theta(p.value.values().begin(), p.value.values().end());
  std::vector<double> m(6, 0.0), v(6, 0.0);
  for (int step = 1; step <= 5; ++step) {
    p.grad = random_matrix(2, 3, rng);
    for (std::size_t i = 0; i < 6; ++i) {
      const double g = p.grad.values()[i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1.0 - std::pow(0.9, step));
      const double vh = v[i] / (1.0 - std::pow(0.999, step));
      theta[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
    adam_step(params, state);
  }
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(p.value.values()[i], theta[i], 1e-14);
}

}  // namespace
}  // namespace molfuse
