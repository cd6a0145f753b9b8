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
#include <vector>

#include "molfuse/dmpnn.h"
#include "molfuse/error.h"
#include "molfuse/features.h"
#include "molfuse/molgraph.h"
#include "molgen.h"

namespace molfuse {
namespace {

// Direct per-edge implementation of the message-passing recurrence, used as
// an oracle for the batched tape version.
Matrix reference_atom_states(const MolecularGraph& g, const EncoderWeights& w, int depth) {
  const FeatureVectors f = featurize(g);
  const int h = w.hidden_size();
  const int n_edges = 2 * g.num_bonds();
  auto src = [&](int e) { return e % 2 == 0 ? g.bonds()[e / 2].a : g.bonds()[e / 2].b; };
  auto dst = [&](int e) { return e % 2 == 0 ? g.bonds()[e / 2].b : g.bonds()[e / 2].a; };
  auto relu = [](double x) { return x > 0 ? x : 0.0; };

  std::vector<std::vector<double>> s0(n_edges, std::vector<double>(h));
  for (int e = 0; e < n_edges; ++e) {
    std::vector<double> in;
    for (int k = 0; k < kAtomFeatureDim; ++k) in.push_back(f.atom_features(src(e), k));
    for (int k = 0; k < kBondFeatureDim; ++k) in.push_back(f.bond_features(e / 2, k));
    for (int j = 0; j < h; ++j) {
      double acc = w.b_in.value(0, j);
      for (std::size_t k = 0; k < in.size(); ++k) acc += in[k] * w.w_in.value(k, j);
      s0[e][j] = relu(acc);
    }
  }
  std::vector<std::vector<double>> s = s0;
  for (int t = 1; t < depth; ++t) {
    std::vector<std::vector<double>> next(n_edges, std::vector<double>(h));
    for (int e = 0; e < n_edges; ++e) {
      std::vector<double> m(h, 0.0);
      for (int k = 0; k < n_edges; ++k) {
        if (dst(k) == src(e) && src(k) != dst(e)) {
          for (int j = 0; j < h; ++j) m[j] += s[k][j];
        }
      }
      for (int j = 0; j < h; ++j) {
        double acc = w.b_msg.value(0, j);
        for (int k = 0; k < h; ++k) acc += m[k] * w.w_msg.value(k, j);
        next[e][j] = relu(s0[e][j] + acc);
      }
    }
    s = next;
  }
  Matrix out(g.num_atoms(), h);
  for (int v = 0; v < g.num_atoms(); ++v) {
    std::vector<double> in;
    for (int k = 0; k < kAtomFeatureDim; ++k) in.push_back(f.atom_features(v, k));
    std::vector<double> incoming(h, 0.0);
    for (int e = 0; e < n_edges; ++e) {
      if (dst(e) == v) {
        for (int j = 0; j < h; ++j) incoming[j] += s[e][j];
      }
    }
    in.insert(in.end(), incoming.begin(), incoming.end());
    for (int j = 0; j < h; ++j) {
      double acc = w.b_atom.value(0, j);
      for (std::size_t k = 0; k < in.size(); ++k) acc += in[k] * w.w_atom.value(k, j);
      out(v, j) = relu(acc);
    }
  }
  return out;
}

void randomize_biases(EncoderWeights& w, std::uint64_t seed) {
  Rng rng(seed);
  for (Parameter* p : {&w.b_in, &w.b_msg, &w.b_atom}) {
    for (double& v : p->value.values()) v = rng.uniform(-0.2, 0.2);
  }
}

TEST(InitEncoder, ShapesAndDeterminism) {
  const EncoderConfig c{.hidden_size = 8, .depth = 2, .seed = 3};
  const EncoderWeights a = init_encoder(c);
  EXPECT_EQ(a.w_msg.value.rows(), 8u);
  EXPECT_EQ(a.w_msg.value.cols(), 8u);
  EXPECT_EQ(a.w_in.value.rows(), static_cast<std::size_t>(kAtomFeatureDim + kBondFeatureDim));
  EXPECT_EQ(a.w_atom.value.rows(), static_cast<std::size_t>(kAtomFeatureDim + 8));
  EXPECT_EQ(a.b_atom.value, Matrix(1, 8));

  const EncoderWeights b = init_encoder(c);
  EXPECT_EQ(a.w_in.value, b.w_in.value);
  EXPECT_EQ(a.w_msg.value, b.w_msg.value);
  EXPECT_EQ(a.w_atom.value, b.w_atom.value);

  EncoderConfig other = c;
  other.seed = 4;
  EXPECT_NE(init_encoder(other).w_in.value, a.w_in.value);
}

TEST(InitEncoder, UniformScaledByFanIn) {
  const EncoderWeights w = init_encoder({.hidden_size = 64, .depth = 3, .seed = 9});
  for (const Parameter* p : {&w.w_in, &w.w_msg, &w.w_atom}) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p->value.rows()));
    double lo = 0, hi = 0;
    for (double v : p->value.values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    EXPECT_LE(hi, bound);
    EXPECT_GE(lo, -bound);
    EXPECT_GT(hi, 0.9 * bound);
    EXPECT_LT(lo, -0.9 * bound);
  }
}

TEST(InitEncoder, ConfigLimits) {
  auto code = [](EncoderConfig c) {
    try {
      validate(c);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kEmptyGraph;  // sentinel for "accepted"
  };
  EXPECT_EQ(code({.hidden_size = 0}), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code({.hidden_size = 4097}), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code({.hidden_size = 4, .depth = 0}), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code({.hidden_size = 4, .depth = 11}), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code({.hidden_size = 4096, .depth = 10}), ErrorCode::kEmptyGraph);
}

TEST(Encode, ZeroWeightsGiveZeroEmbedding) {
  const EncoderConfig c{.hidden_size = 5, .depth = 3, .seed = 1};
  EncoderWeights w = init_encoder(c);
  for (Parameter* p : w.parameters()) p->value.fill(0.0);
  for (const char* s : {"O", "CCO", "c1ccccc1", "C[N+](=O)[O-]"}) {
    const Embedding e = encode(parse_smiles(s), w, c);
    EXPECT_EQ(e.values, std::vector<double>(5, 0.0)) << s;
  }
}

TEST(Encode, SingleAtomIsHandForwardPass) {
  const EncoderConfig c{.hidden_size = 7, .depth = 3, .seed = 12};
  EncoderWeights w = init_encoder(c);
  randomize_biases(w, 13);
  const MolecularGraph g = parse_smiles("O");
  const Matrix x = featurize(g).atom_features;
  const Embedding e = encode(g, w, c);
  ASSERT_EQ(e.values.size(), 7u);
  for (int j = 0; j < 7; ++j) {
    double acc = w.b_atom.value(0, j);
    for (int k = 0; k < kAtomFeatureDim; ++k) acc += x(0, k) * w.w_atom.value(k, j);
    EXPECT_NEAR(e.values[j], std::max(0.0, acc), 1e-14);
  }
}

TEST(Encode, MatchesPerEdgeReference) {
  const auto mols = testing::random_molecules(25, 31);
  for (int depth : {1, 2, 4}) {
    const EncoderConfig c{.hidden_size = 6, .depth = depth, .seed = 40u + depth};
    EncoderWeights w = init_encoder(c);
    randomize_biases(w, 50 + depth);
    for (const auto& m : mols) {
      SCOPED_TRACE(m.smiles);
      const MolecularGraph g = parse_smiles(m.smiles);
      EXPECT_LE(max_abs_diff(encode_atoms(g, w, c), reference_atom_states(g, w, depth)), 1e-12);
    }
  }
}

TEST(Encode, AtomPermutationInvariance) {
  const EncoderConfig c{.hidden_size = 16, .depth = 3, .seed = 5};
  const EncoderWeights w = init_encoder(c);
  const MolecularGraph cco = parse_smiles("CCO");
  const Embedding base = encode(cco, w, c);
  std::vector<int> order{0, 1, 2};
  while (std::next_permutation(order.begin(), order.end())) {
    const Embedding p = encode(permute_atoms(cco, order), w, c);
    for (int j = 0; j < 16; ++j) EXPECT_NEAR(p.values[j], base.values[j], 1e-12);
  }

  Rng rng(77);
  for (const auto& m : testing::random_molecules(40, 78)) {
    const MolecularGraph g = parse_smiles(m.smiles);
    std::vector<int> perm(g.num_atoms());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<int>(perm));
    const Embedding a = encode(g, w, c);
    const Embedding b = encode(permute_atoms(g, perm), w, c);
    for (int j = 0; j < 16; ++j) EXPECT_NEAR(a.values[j], b.values[j], 1e-10) << m.smiles;
  }
}

TEST(Encode, DepthOneReadoutIsLocal) {
  const EncoderConfig c{.hidden_size = 8, .depth = 1, .seed = 6};
  EncoderWeights w = init_encoder(c);
  randomize_biases(w, 7);
  // Path graph; the far endpoint (atom 0) is three bonds from atom 3.
  const Matrix a = encode_atoms(parse_smiles("CCCC"), w, c);
  const Matrix b = encode_atoms(parse_smiles("CCCN"), w, c);
  for (int j = 0; j < 8; ++j) EXPECT_EQ(a(0, j), b(0, j));
  EXPECT_GT(max_abs_diff(a, b), 0.0);

  // With two iterations, information reaches two bonds further but not three.
  const EncoderConfig c2{.hidden_size = 8, .depth = 2, .seed = 6};
  EncoderWeights w2 = init_encoder(c2);
  randomize_biases(w2, 7);
  const Matrix a2 = encode_atoms(parse_smiles("CCCCC"), w2, c2);
  const Matrix b2 = encode_atoms(parse_smiles("CCCCN"), w2, c2);
  for (int j = 0; j < 8; ++j) EXPECT_EQ(a2(0, j), b2(0, j));
}

TEST(Encode, BatchedEqualsIndividual) {
  const EncoderConfig c{.hidden_size = 10, .depth = 3, .seed = 8};
  const EncoderWeights w = init_encoder(c);
  std::vector<PreparedMolecule> prepared;
  std::vector<MolecularGraph> graphs;
  for (const auto& m : testing::random_molecules(300, 9)) {
    graphs.push_back(parse_smiles(m.smiles));
    prepared.push_back(prepare_molecule(graphs.back()));
  }
  prepared.push_back(prepare_molecule(parse_smiles("O")));
  graphs.push_back(parse_smiles("O"));
  const Matrix all = encode_many(prepared, w, c.depth);
  ASSERT_EQ(all.rows(), graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Embedding e = encode(graphs[i], w, c);
    for (int j = 0; j < 10; ++j) EXPECT_NEAR(all(i, j), e.values[j], 1e-12);
  }
}

TEST(Encode, EmptyGraphIsRejected) {
  const EncoderConfig c{.hidden_size = 4, .depth = 2, .seed = 1};
  const EncoderWeights w = init_encoder(c);
  try {
    encode(MolecularGraph::from_parts({}, {}), w, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyGraph);
  }
}

TEST(Encode, DifferentMoleculesDifferentEmbeddings) {
  const EncoderConfig c{.hidden_size = 12, .depth = 3, .seed = 10};
  const EncoderWeights w = init_encoder(c);
  const Embedding a = encode(parse_smiles("CCO"), w, c);
  const Embedding b = encode(parse_smiles("CCN"), w, c);
  EXPECT_NE(a.values, b.values);
  for (double v : a.values) EXPECT_TRUE(std::isfinite(v));
}

}  // namespace
}  // namespace molfuse
