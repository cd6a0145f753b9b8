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

#ifndef MOLFUSE_FFN_H_
#define MOLFUSE_FFN_H_

#include <cstdint>
#include <vector>

#include "molfuse/tape.h"

namespace molfuse {

struct FFNConfig {
  int n_layers = 2;  // hidden layers; each is linear -> relu -> dropout
  int width = 256;
  double dropout = 0.0;
  int output_dim = 1;

  bool operator==(const FFNConfig&) const = default;
};

//! Throws InvalidArgument for n_layers < 1, width < 1, output_dim < 1 or
//! dropout outside [0, 1).
void validate(const FFNConfig& config);

//! Weights and biases alternate: W_0, b_0, ..., W_L, b_L (the last pair is
//! the linear output layer).
struct FFNWeights {
  std::vector<Parameter> layers;

  std::vector<Parameter*> parameters();
  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().value.rows(); }
};

FFNWeights init_ffn(const FFNConfig& config, std::size_t input_dim, std::uint64_t seed);

Var ffn_on_tape(Tape& tape, Var x, FFNWeights& weights, const FFNConfig& config);
//! Weights recorded as constants.
Var ffn_on_tape(Tape& tape, Var x, const FFNWeights& weights, const FFNConfig& config);

}  // namespace molfuse

#endif  // MOLFUSE_FFN_H_
