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

#include "molfuse/adam.h"

#include <cmath>

#include "molfuse/error.h"

namespace molfuse {

AdamState make_adam_state(std::span<Parameter* const> params, AdamConfig config) {
  AdamState state;
  state.config = config;
  for (const Parameter* p : params) {
    state.first_moment.emplace_back(p->value.rows(), p->value.cols());
    state.second_moment.emplace_back(p->value.rows(), p->value.cols());
  }
  return state;
}

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw Error(ErrorCode::kShapeMismatch, "optimizer state tracks a different parameter count");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Parameter& p = *params[k];
    if (!p.grad.same_shape(p.value) || !state.first_moment[k].same_shape(p.value)) {
      throw Error(ErrorCode::kShapeMismatch, "gradient or moment shape differs from parameter " + p.name);
    }
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto w = params[k]->value.values();
    auto g = params[k]->grad.values();
    auto m = state.first_moment[k].values();
    auto v = state.second_moment[k].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

}  // namespace molfuse
