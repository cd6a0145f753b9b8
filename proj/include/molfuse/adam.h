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

#ifndef MOLFUSE_ADAM_H_
#define MOLFUSE_ADAM_H_

#include <span>
#include <vector>

#include "molfuse/tape.h"

namespace molfuse {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  long step = 0;
};

//! Moments start at zero, shaped like `params`.
AdamState make_adam_state(std::span<Parameter* const> params, AdamConfig config = {});

//! One bias-corrected Adam update using each parameter's `grad`.
//! Throws ShapeMismatch if the state does not match the parameters.
void adam_step(std::span<Parameter* const> params, AdamState& state);

}  // namespace molfuse

#endif  // MOLFUSE_ADAM_H_
