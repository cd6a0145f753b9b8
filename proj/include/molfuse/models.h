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

#ifndef MOLFUSE_MODELS_H_
#define MOLFUSE_MODELS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "molfuse/adam.h"
#include "molfuse/dmpnn.h"
#include "molfuse/ffn.h"
#include "molfuse/fusion.h"
#include "molfuse/targets.h"

namespace molfuse {

enum class ModelKind { kSingleTask, kMultiTask };

const char* model_kind_name(ModelKind kind);

struct TrainConfig {
  int epochs = 50;
  int batch_size = 64;
  //! Drives FFN initialization, per-epoch shuffling and dropout masks. The
  //! encoder is initialized from EncoderConfig::seed.
  std::uint64_t seed = 0;
  AdamConfig adam;
};

//! Encoder + FFN trained jointly. A single-task model is the one-task case
//! of the same code path.
struct GraphModel {
  ModelKind kind = ModelKind::kSingleTask;
  std::vector<std::string> tasks;
  EncoderConfig encoder_config;
  EncoderWeights encoder;
  FFNConfig ffn_config;
  FFNWeights ffn;
  TargetScaler scaler;
  TrainConfig train_config;
};

struct GraphTrainResult {
  GraphModel model;
  std::vector<double> loss_trace;  // mean batch loss per epoch (scaled units)
};

//! Mini-batch Adam on z-scored targets with the masked loss. Throws
//! InvalidArgument when a single-task model is given more than one task.
GraphTrainResult train_model(ModelKind kind, std::span<const PreparedMolecule> molecules,
                             const SparseTargets& targets, const std::vector<std::string>& tasks,
                             const std::vector<std::uint8_t>& log_flags, const EncoderConfig& encoder_config,
                             FFNConfig ffn_config, const TrainConfig& train_config);

//! Network output before inverting the scaler.
Matrix predict_scaled(const GraphModel& model, std::span<const PreparedMolecule> molecules);
//! Predictions in raw units.
Matrix predict(const GraphModel& model, std::span<const PreparedMolecule> molecules);

//! Content hash of the encoder weights; serves as the provenance id of the
//! embeddings it produces.
std::string encoder_id(const EncoderWeights& weights);

//! One block per model (labelled by the model's first task), in order.
std::vector<EmbeddingBlock> embed_dataset(std::span<const GraphModel* const> models,
                                          std::span<const PreparedMolecule> molecules);

enum class FusionMode { kConcat, kPca };

struct FusionSpec {
  FusionMode mode = FusionMode::kConcat;
  std::size_t components = 0;  // pca only

  std::string name() const;
};

//! FFN over fused frozen embeddings.
struct FusedModel {
  std::vector<std::string> tasks;
  std::vector<BlockInfo> layout;
  FusionSpec fusion;
  std::optional<PCAModel> pca;
  FFNConfig ffn_config;
  FFNWeights ffn;
  TargetScaler scaler;
  TrainConfig train_config;

  std::size_t input_dim() const;
};

struct FusedTrainResult {
  FusedModel model;
  std::vector<double> loss_trace;
};

//! Trains only the FFN. `training_rows` are the dataset row ids of the rows
//! of `fused` (used as provenance). In pca mode a given `pca` must have been
//! fitted within `training_rows` (FoldLeakage otherwise); when absent one is
//! fitted on `fused`.
FusedTrainResult train_fused(const FusedMatrix& fused, std::span<const std::size_t> training_rows,
                             const SparseTargets& targets, const std::vector<std::string>& tasks,
                             const std::vector<std::uint8_t>& log_flags, const FusionSpec& fusion,
                             std::optional<PCAModel> pca, FFNConfig ffn_config, const TrainConfig& train_config);

//! FFN input for the fused matrix (pca-projected when applicable). Throws
//! WidthMismatch if the layout width differs.
Matrix fused_input(const FusedModel& model, const Matrix& fused);

Matrix predict_scaled(const FusedModel& model, const Matrix& fused);
Matrix predict(const FusedModel& model, const Matrix& fused);

}  // namespace molfuse

#endif  // MOLFUSE_MODELS_H_
