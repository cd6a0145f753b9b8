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

#ifndef MOLFUSE_CV_H_
#define MOLFUSE_CV_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "molfuse/dataset.h"
#include "molfuse/folds.h"
#include "molfuse/models.h"

namespace molfuse {

inline constexpr int kReportVersion = 1;

struct HyperParams {
  int hidden_size = 300;
  int depth = 3;
  int ffn_width = 256;

  bool operator==(const HyperParams&) const = default;
};

nlohmann::json to_json(const HyperParams& hp);

//! {64, 300} x {2, 3} x {128, 256}, hidden size varying slowest.
std::vector<HyperParams> default_grid();

//! Parses "h:T:w,h:T:w,..." or "default".
std::vector<HyperParams> parse_grid(const std::string& text);

enum class CVKind { kSingleTask, kMultiTask, kFusedConcat, kFusedPca };

struct CVModelSpec {
  CVKind kind = CVKind::kSingleTask;
  std::size_t components = 0;  // fused pca only

  std::string name() const;  // st, mt, fmt-concat, fmt-pca<n>
  bool operator==(const CVModelSpec&) const = default;
};

//! Accepts st, mt, fmt (= fmt-concat), fmt-concat, fmt-pca<n>.
CVModelSpec parse_model_spec(const std::string& text);

struct CVConfig {
  std::vector<CVModelSpec> models;
  //! Empty means a single subset with every target column.
  std::vector<std::vector<std::string>> task_subsets;
  std::vector<HyperParams> grid = default_grid();
  std::uint64_t seed = 0;
  int epochs = 50;
  int batch_size = 64;
  int ffn_layers = 2;
  double dropout = 0.0;
  AdamConfig adam;
  //! CUR counts and influence ratios for fmt-concat models.
  bool analyses = true;
  std::size_t cur_k = 50;
  double noise_multiplier = 3.0;
  int noise_seeds = 5;
};

struct GridSearchResult {
  HyperParams best;
  std::vector<double> scores;  // mean inner-validation RMSE per grid point (scaled units)
};

//! Inner-fold search for a graph model on `table` (already restricted to the
//! model's tasks) within outer fold `fold`. A single-point grid is returned
//! without training. Ties go to the earlier grid point.
GridSearchResult grid_search(const DatasetTable& table, std::span<const PreparedMolecule> molecules,
                             const FoldPlan& plan, int fold, ModelKind kind, const CVConfig& config);

//! Seed for a model trained on `tasks` in outer fold `fold`; `inner` is the
//! inner fold or -1 for the outer retrain. Independent of the model kind so
//! single-task and one-task multi-task runs coincide.
std::uint64_t model_seed(std::uint64_t run_seed, int fold, int inner, const std::vector<std::string>& tasks);

//! Runs the nested protocol and returns the report document. Every model
//! kind shares one fold plan.
nlohmann::json nested_cv(const DatasetTable& table, const CVConfig& config);

}  // namespace molfuse

#endif  // MOLFUSE_CV_H_
