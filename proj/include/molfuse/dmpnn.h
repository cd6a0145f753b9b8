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

#ifndef MOLFUSE_DMPNN_H_
#define MOLFUSE_DMPNN_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "molfuse/matrix.h"
#include "molfuse/molgraph.h"
#include "molfuse/tape.h"

namespace molfuse {

inline constexpr int kMaxHiddenSize = 4096;
inline constexpr int kMaxDepth = 10;

struct EncoderConfig {
  int hidden_size = 300;
  //! Number of message-update iterations; 1 means the initial bond states
  //! feed the atom readout directly.
  int depth = 3;
  std::uint64_t seed = 0;

  bool operator==(const EncoderConfig&) const = default;
};

//! Throws InvalidArgument unless 1 <= hidden_size <= 4096 and 1 <= depth <= 10.
void validate(const EncoderConfig& config);

//! Row-vector convention: outputs are inputs * W + b.
struct EncoderWeights {
  Parameter w_in;    // (D_a + D_b) x h
  Parameter b_in;    // 1 x h
  Parameter w_msg;   // h x h
  Parameter b_msg;   // 1 x h
  Parameter w_atom;  // (D_a + h) x h
  Parameter b_atom;  // 1 x h

  std::vector<Parameter*> parameters();
  int hidden_size() const { return static_cast<int>(w_msg.value.cols()); }
};

//! Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights from `config.seed`; zero biases.
EncoderWeights init_encoder(const EncoderConfig& config);

//! Featurized molecule with its directed-edge bookkeeping. Directed edge 2b
//! runs bonds[b].a -> bonds[b].b and 2b+1 the reverse.
struct PreparedMolecule {
  Matrix atom_features;            // n_atoms x D_a
  Matrix edge_inputs;              // n_edges x (D_a + D_b): [x_source ; bond features]
  std::vector<int> edge_target;    // destination atom of each directed edge
  std::vector<int> message_from;   // incoming edge k->v ...
  std::vector<int> message_to;     // ... contributing to outgoing edge v->w (k != w)
};

//! Throws EmptyGraph for a graph without atoms.
PreparedMolecule prepare_molecule(const MolecularGraph& graph);

//! Several molecules stacked into one disjoint graph.
struct MolBatch {
  Matrix atom_features;
  Matrix edge_inputs;
  std::vector<int> edge_target;
  std::vector<int> message_from;
  std::vector<int> message_to;
  std::vector<int> atom_molecule;
  int n_molecules = 0;
};

MolBatch make_batch(std::span<const PreparedMolecule* const> molecules);

struct EncoderOutput {
  Var atom_states;  // n_atoms x h, per-atom readout before pooling
  Var embeddings;   // n_molecules x h
};

//! Records the encoder on `tape`:
//!   s0[vw]  = relu([x_v ; e_vw] W_in + b_in)
//!   m_t[vw] = sum over k in N(v) \ {w} of s_{t-1}[kv]
//!   s_t[vw] = relu(s0[vw] + m_t[vw] W_msg + b_msg),   t = 1 .. depth-1
//!   a[v]    = relu([x_v ; sum over u in N(v) of s[uv]] W_atom + b_atom)
//!   emb     = mean over atoms of a[v]
EncoderOutput encode_on_tape(Tape& tape, const MolBatch& batch, EncoderWeights& weights, int depth);

//! Same computation with the weights recorded as constants (no gradients).
EncoderOutput encode_on_tape(Tape& tape, const MolBatch& batch, const EncoderWeights& weights, int depth);

struct Embedding {
  std::vector<double> values;
  std::string source_property;
  std::string provenance;
};

Embedding encode(const MolecularGraph& graph, const EncoderWeights& weights, const EncoderConfig& config);

//! Per-atom readout vectors (rows follow atom order).
Matrix encode_atoms(const MolecularGraph& graph, const EncoderWeights& weights, const EncoderConfig& config);

//! Embeddings for many molecules (one row each), processed in fixed-size chunks.
Matrix encode_many(std::span<const PreparedMolecule> molecules, const EncoderWeights& weights, int depth);

}  // namespace molfuse

#endif  // MOLFUSE_DMPNN_H_
