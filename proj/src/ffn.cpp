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

#include "molfuse/ffn.h"

#include <cmath>
#include <string>

#include "molfuse/error.h"
#include "molfuse/random.h"

namespace molfuse {

namespace {

template <typename Weights, typename Bind>
Var record_ffn(Tape& tape, Var x, Weights& w, const FFNConfig& config, Bind bind) {
  const std::size_t n_linear = w.layers.size() / 2;
  Var h = x;
  for (std::size_t l = 0; l < n_linear; ++l) {
    h = tape.add_row(tape.matmul(h, bind(w.layers[2 * l])), bind(w.layers[2 * l + 1]));
    if (l + 1 < n_linear) {
      h = tape.relu(h);
      if (config.dropout > 0.0) h = tape.dropout(h, config.dropout);
    }
  }
  return h;
}

}  // namespace

void validate(const FFNConfig& config) {
  if (config.n_layers < 1) throw Error(ErrorCode::kInvalidArgument, "ffn needs at least one hidden layer");
  if (config.width < 1) throw Error(ErrorCode::kInvalidArgument, "ffn width must be positive");
  if (config.output_dim < 1) throw Error(ErrorCode::kInvalidArgument, "ffn output_dim must be positive");
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "dropout must be in [0, 1)");
  }
}

std::vector<Parameter*> FFNWeights::parameters() {
  std::vector<Parameter*> out;
  for (Parameter& p : layers) out.push_back(&p);
  return out;
}

FFNWeights init_ffn(const FFNConfig& config, std::size_t input_dim, std::uint64_t seed) {
  validate(config);
  if (input_dim == 0) throw Error(ErrorCode::kInvalidArgument, "ffn input width must be positive");
  Rng rng(seed);
  FFNWeights w;
  std::size_t fan_in = input_dim;
  for (int l = 0; l <= config.n_layers; ++l) {
    const std::size_t fan_out = l == config.n_layers ? static_cast<std::size_t>(config.output_dim)
                                                     : static_cast<std::size_t>(config.width);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix weight(fan_in, fan_out);
    for (double& v : weight.values()) v = rng.uniform(-bound, bound);
    w.layers.emplace_back("ffn.w" + std::to_string(l), std::move(weight));
    w.layers.emplace_back("ffn.b" + std::to_string(l), Matrix(1, fan_out));
    fan_in = fan_out;
  }
  return w;
}

Var ffn_on_tape(Tape& tape, Var x, FFNWeights& weights, const FFNConfig& config) {
  return record_ffn(tape, x, weights, config, [&](Parameter& p) { return tape.parameter(p); });
}

Var ffn_on_tape(Tape& tape, Var x, const FFNWeights& weights, const FFNConfig& config) {
  return record_ffn(tape, x, weights, config, [&](const Parameter& p) { return tape.input(p.value); });
}

}  // namespace molfuse
