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

#include "molfuse/dmpnn.h"

#include <algorithm>
#include <cmath>

#include "molfuse/error.h"
#include "molfuse/features.h"
#include "molfuse/random.h"

namespace molfuse {

namespace {

constexpr std::size_t kEncodeChunk = 128;

Matrix uniform_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
  return m;
}

template <typename Weights, typename Bind>
EncoderOutput record_encoder(Tape& tape, const MolBatch& batch, Weights& w, int depth, Bind bind) {
  const int n_edges = static_cast<int>(batch.edge_inputs.rows());
  const int n_atoms = static_cast<int>(batch.atom_features.rows());

  const Var w_in = bind(w.w_in), b_in = bind(w.b_in);
  const Var w_msg = bind(w.w_msg), b_msg = bind(w.b_msg);
  const Var w_atom = bind(w.w_atom), b_atom = bind(w.b_atom);

  const Var s0 = tape.relu(tape.add_row(tape.matmul(tape.input(batch.edge_inputs), w_in), b_in));
  Var state = s0;
  for (int t = 1; t < depth; ++t) {
    const Var incoming = tape.gather_rows(state, batch.message_from);
    const Var message = tape.segment_sum(incoming, batch.message_to, n_edges);
    state = tape.relu(tape.add(s0, tape.add_row(tape.matmul(message, w_msg), b_msg)));
  }
  const Var atom_in = tape.segment_sum(state, batch.edge_target, n_atoms);
  const Var atom_cat = tape.concat_cols(tape.input(batch.atom_features), atom_in);
  const Var atoms = tape.relu(tape.add_row(tape.matmul(atom_cat, w_atom), b_atom));
  const Var pooled = tape.segment_mean(atoms, batch.atom_molecule, batch.n_molecules);
  return {atoms, pooled};
}

}  // namespace

void validate(const EncoderConfig& config) {
  if (config.hidden_size < 1 || config.hidden_size > kMaxHiddenSize) {
    throw Error(ErrorCode::kInvalidArgument, "hidden size must be in [1, 4096]");
  }
  if (config.depth < 1 || config.depth > kMaxDepth) {
    throw Error(ErrorCode::kInvalidArgument, "depth must be in [1, 10]");
  }
}

std::vector<Parameter*> EncoderWeights::parameters() { return {&w_in, &b_in, &w_msg, &b_msg, &w_atom, &b_atom}; }

EncoderWeights init_encoder(const EncoderConfig& config) {
  validate(config);
  const std::size_t h = static_cast<std::size_t>(config.hidden_size);
  Rng rng(config.seed);
  EncoderWeights w;
  w.w_in = Parameter("encoder.w_in", uniform_matrix(rng, kAtomFeatureDim + kBondFeatureDim, h));
  w.b_in = Parameter("encoder.b_in", Matrix(1, h));
  w.w_msg = Parameter("encoder.w_msg", uniform_matrix(rng, h, h));
  w.b_msg = Parameter("encoder.b_msg", Matrix(1, h));
  w.w_atom = Parameter("encoder.w_atom", uniform_matrix(rng, kAtomFeatureDim + h, h));
  w.b_atom = Parameter("encoder.b_atom", Matrix(1, h));
  return w;
}

PreparedMolecule prepare_molecule(const MolecularGraph& graph) {
  if (graph.num_atoms() == 0) throw Error(ErrorCode::kEmptyGraph, "molecule has no atoms");
  const FeatureVectors f = featurize(graph);
  PreparedMolecule out;
  out.atom_features = f.atom_features;

  const int n_edges = 2 * graph.num_bonds();
  out.edge_inputs = Matrix(n_edges, kAtomFeatureDim + kBondFeatureDim);
  out.edge_target.resize(n_edges);
  std::vector<int> edge_source(n_edges);
  for (int b = 0; b < graph.num_bonds(); ++b) {
    const Bond& bond = graph.bonds()[b];
    const int ends[2][2] = {{bond.a, bond.b}, {bond.b, bond.a}};
    for (int d = 0; d < 2; ++d) {
      const int e = 2 * b + d;
      edge_source[e] = ends[d][0];
      out.edge_target[e] = ends[d][1];
      auto row = out.edge_inputs.row(e);
      const auto x = f.atom_features.row(ends[d][0]);
      const auto eb = f.bond_features.row(b);
      std::copy(x.begin(), x.end(), row.begin());
      std::copy(eb.begin(), eb.end(), row.begin() + kAtomFeatureDim);
    }
  }

  // For edge v->w, every incoming k->v with k != w contributes.
  for (int e = 0; e < n_edges; ++e) {
    const int v = edge_source[e];
    const int w = out.edge_target[e];
    for (const Neighbor& nb : graph.neighbors(v)) {
      if (nb.atom == w) continue;
      const int incoming = graph.bonds()[nb.bond].a == nb.atom ? 2 * nb.bond : 2 * nb.bond + 1;
      out.message_from.push_back(incoming);
      out.message_to.push_back(e);
    }
  }
  return out;
}

MolBatch make_batch(std::span<const PreparedMolecule* const> molecules) {
  std::size_t n_atoms = 0, n_edges = 0, n_pairs = 0;
  for (const PreparedMolecule* m : molecules) {
    n_atoms += m->atom_features.rows();
    n_edges += m->edge_inputs.rows();
    n_pairs += m->message_from.size();
  }
  MolBatch batch;
  batch.n_molecules = static_cast<int>(molecules.size());
  batch.atom_features = Matrix(n_atoms, kAtomFeatureDim);
  batch.edge_inputs = Matrix(n_edges, kAtomFeatureDim + kBondFeatureDim);
  batch.edge_target.reserve(n_edges);
  batch.message_from.reserve(n_pairs);
  batch.message_to.reserve(n_pairs);
  batch.atom_molecule.reserve(n_atoms);

  int atom_offset = 0, edge_offset = 0;
  for (std::size_t mi = 0; mi < molecules.size(); ++mi) {
    const PreparedMolecule& m = *molecules[mi];
    std::copy(m.atom_features.values().begin(), m.atom_features.values().end(),
              batch.atom_features.values().begin() + static_cast<std::ptrdiff_t>(atom_offset) * kAtomFeatureDim);
    std::copy(m.edge_inputs.values().begin(), m.edge_inputs.values().end(),
              batch.edge_inputs.values().begin() +
                  static_cast<std::ptrdiff_t>(edge_offset) * (kAtomFeatureDim + kBondFeatureDim));
    for (int t : m.edge_target) batch.edge_target.push_back(t + atom_offset);
    for (int f : m.message_from) batch.message_from.push_back(f + edge_offset);
    for (int t : m.message_to) batch.message_to.push_back(t + edge_offset);
    for (std::size_t a = 0; a < m.atom_features.rows(); ++a) batch.atom_molecule.push_back(static_cast<int>(mi));
    atom_offset += static_cast<int>(m.atom_features.rows());
    edge_offset += static_cast<int>(m.edge_inputs.rows());
  }
  return batch;
}

EncoderOutput encode_on_tape(Tape& tape, const MolBatch& batch, EncoderWeights& weights, int depth) {
  return record_encoder(tape, batch, weights, depth, [&](Parameter& p) { return tape.parameter(p); });
}

EncoderOutput encode_on_tape(Tape& tape, const MolBatch& batch, const EncoderWeights& weights, int depth) {
  return record_encoder(tape, batch, weights, depth, [&](const Parameter& p) { return tape.input(p.value); });
}

Embedding encode(const MolecularGraph& graph, const EncoderWeights& weights, const EncoderConfig& config) {
  validate(config);
  const PreparedMolecule mol = prepare_molecule(graph);
  const PreparedMolecule* ptr = &mol;
  const MolBatch batch = make_batch(std::span(&ptr, 1));
  Tape tape;
  const EncoderOutput out = encode_on_tape(tape, batch, weights, config.depth);
  const auto row = tape.value(out.embeddings).row(0);
  return Embedding{std::vector<double>(row.begin(), row.end()), {}, {}};
}

Matrix encode_atoms(const MolecularGraph& graph, const EncoderWeights& weights, const EncoderConfig& config) {
  validate(config);
  const PreparedMolecule mol = prepare_molecule(graph);
  const PreparedMolecule* ptr = &mol;
  const MolBatch batch = make_batch(std::span(&ptr, 1));
  Tape tape;
  return tape.value(encode_on_tape(tape, batch, weights, config.depth).atom_states);
}

Matrix encode_many(std::span<const PreparedMolecule> molecules, const EncoderWeights& weights, int depth) {
  const std::size_t h = static_cast<std::size_t>(weights.hidden_size());
  Matrix out(molecules.size(), h);
  std::vector<const PreparedMolecule*> chunk;
  for (std::size_t start = 0; start < molecules.size(); start += kEncodeChunk) {
    const std::size_t end = std::min(molecules.size(), start + kEncodeChunk);
    chunk.clear();
    for (std::size_t i = start; i < end; ++i) chunk.push_back(&molecules[i]);
    const MolBatch batch = make_batch(chunk);
    Tape tape;
    const Matrix& emb = tape.value(encode_on_tape(tape, batch, weights, depth).embeddings);
    for (std::size_t i = 0; i < emb.rows(); ++i) {
      std::copy(emb.row(i).begin(), emb.row(i).end(), out.row(start + i).begin());
    }
  }
  return out;
}

}  // namespace molfuse
