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

#include "molfuse/models.h"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "molfuse/error.h"
#include "molfuse/fingerprint.h"
#include "molfuse/random.h"

namespace molfuse {

namespace {

constexpr std::size_t kPredictChunk = 128;

enum SeedStream : std::uint64_t { kFfnInit = 0, kShuffle = 1, kDropout = 2 };

bool any_present(const SparseTargets& t) {
  return std::any_of(t.mask.begin(), t.mask.end(), [](std::uint8_t m) { return m != 0; });
}

void check_rows(std::size_t inputs, const SparseTargets& targets, const std::vector<std::string>& tasks,
                const std::vector<std::uint8_t>& log_flags) {
  if (inputs != targets.rows()) throw Error(ErrorCode::kRowCountMismatch, "inputs and targets differ in rows");
  if (tasks.size() != targets.tasks() || log_flags.size() != targets.tasks()) {
    throw Error(ErrorCode::kShapeMismatch, "task names and log flags must match the target columns");
  }
}

// Shared mini-batch loop. `build` records the forward pass for the given rows
// and returns the prediction node.
template <typename Build>
std::vector<double> run_training(std::span<Parameter* const> params, const SparseTargets& scaled,
                                 const TrainConfig& config, Build build) {
  if (config.batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be positive");
  if (config.epochs < 0) throw Error(ErrorCode::kInvalidArgument, "epochs must be non-negative");
  AdamState adam = make_adam_state(params, config.adam);
  std::vector<std::size_t> order(scaled.rows());
  std::vector<double> trace;
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(config.seed, {kShuffle, static_cast<std::uint64_t>(epoch)}));
    shuffle_rng.shuffle(std::span(order));
    double total = 0.0;
    int counted = 0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(batch, order.size() - start));
      const SparseTargets bt = select_rows(scaled, rows);
      if (!any_present(bt)) continue;
      for (Parameter* p : params) p->zero_grad();
      Tape tape(true, derive_seed(config.seed, {kDropout, static_cast<std::uint64_t>(epoch), b}));
      const Var loss = tape.masked_mse(build(tape, rows), bt.values, bt.mask);
      tape.backward(loss);
      adam_step(params, adam);
      total += tape.value(loss)(0, 0);
      ++counted;
    }
    trace.push_back(counted ? total / counted : 0.0);
  }
  return trace;
}

}  // namespace

const char* model_kind_name(ModelKind kind) { return kind == ModelKind::kSingleTask ? "st" : "mt"; }

GraphTrainResult train_model(ModelKind kind, std::span<const PreparedMolecule> molecules,
                             const SparseTargets& targets, const std::vector<std::string>& tasks,
                             const std::vector<std::uint8_t>& log_flags, const EncoderConfig& encoder_config,
                             FFNConfig ffn_config, const TrainConfig& train_config) {
  check_rows(molecules.size(), targets, tasks, log_flags);
  if (kind == ModelKind::kSingleTask && targets.tasks() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "a single-task model takes exactly one task");
  }
  ffn_config.output_dim = static_cast<int>(targets.tasks());

  GraphTrainResult result;
  GraphModel& m = result.model;
  m.kind = kind;
  m.tasks = tasks;
  m.encoder_config = encoder_config;
  m.encoder = init_encoder(encoder_config);
  m.ffn_config = ffn_config;
  m.ffn = init_ffn(ffn_config, static_cast<std::size_t>(encoder_config.hidden_size),
                   derive_seed(train_config.seed, {kFfnInit}));
  m.scaler = fit_scaler(targets, log_flags);
  m.train_config = train_config;

  const SparseTargets scaled = m.scaler.transform(targets);
  std::vector<Parameter*> params = m.encoder.parameters();
  for (Parameter* p : m.ffn.parameters()) params.push_back(p);

  std::vector<const PreparedMolecule*> chunk;
  result.loss_trace = run_training(params, scaled, train_config, [&](Tape& tape, std::span<const std::size_t> rows) {
    chunk.clear();
    for (std::size_t r : rows) chunk.push_back(&molecules[r]);
    const MolBatch batch = make_batch(chunk);
    const EncoderOutput enc = encode_on_tape(tape, batch, m.encoder, encoder_config.depth);
    return ffn_on_tape(tape, enc.embeddings, m.ffn, m.ffn_config);
  });
  return result;
}

Matrix predict_scaled(const GraphModel& model, std::span<const PreparedMolecule> molecules) {
  Matrix out(molecules.size(), model.tasks.size());
  std::vector<const PreparedMolecule*> chunk;
  for (std::size_t start = 0; start < molecules.size(); start += kPredictChunk) {
    const std::size_t end = std::min(molecules.size(), start + kPredictChunk);
    chunk.clear();
    for (std::size_t i = start; i < end; ++i) chunk.push_back(&molecules[i]);
    const MolBatch batch = make_batch(chunk);
    Tape tape;
    const EncoderOutput enc = encode_on_tape(tape, batch, model.encoder, model.encoder_config.depth);
    const Matrix& pred = tape.value(ffn_on_tape(tape, enc.embeddings, model.ffn, model.ffn_config));
    for (std::size_t i = 0; i < pred.rows(); ++i) {
      std::copy(pred.row(i).begin(), pred.row(i).end(), out.row(start + i).begin());
    }
  }
  return out;
}

Matrix predict(const GraphModel& model, std::span<const PreparedMolecule> molecules) {
  return model.scaler.inverse(predict_scaled(model, molecules));
}

std::string encoder_id(const EncoderWeights& weights) {
  std::vector<std::uint8_t> bytes;
  for (const Parameter* p : {&weights.w_in, &weights.b_in, &weights.w_msg, &weights.b_msg, &weights.w_atom,
                             &weights.b_atom}) {
    const std::uint64_t dims[2] = {p->value.rows(), p->value.cols()};
    const auto* d = reinterpret_cast<const std::uint8_t*>(dims);
    bytes.insert(bytes.end(), d, d + sizeof(dims));
    const auto* v = reinterpret_cast<const std::uint8_t*>(p->value.values().data());
    bytes.insert(bytes.end(), v, v + p->value.size() * sizeof(double));
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::vector<EmbeddingBlock> embed_dataset(std::span<const GraphModel* const> models,
                                          std::span<const PreparedMolecule> molecules) {
  std::vector<EmbeddingBlock> blocks;
  for (const GraphModel* m : models) {
    std::string label;
    for (const std::string& t : m->tasks) label += (label.empty() ? "" : "+") + t;
    blocks.push_back({label, encoder_id(m->encoder), encode_many(molecules, m->encoder, m->encoder_config.depth)});
  }
  return blocks;
}

std::string FusionSpec::name() const {
  return mode == FusionMode::kConcat ? "concat" : "pca" + std::to_string(components);
}

std::size_t FusedModel::input_dim() const {
  std::size_t d = 0;
  for (const BlockInfo& b : layout) d += b.width;
  return d;
}

Matrix fused_input(const FusedModel& model, const Matrix& fused) {
  if (fused.cols() != model.input_dim()) {
    throw Error(ErrorCode::kWidthMismatch, "fused width " + std::to_string(fused.cols()) + " but layout has " +
                                               std::to_string(model.input_dim()));
  }
  if (model.fusion.mode == FusionMode::kPca) return pca_transform(*model.pca, fused);
  return fused;
}

FusedTrainResult train_fused(const FusedMatrix& fused, std::span<const std::size_t> training_rows,
                             const SparseTargets& targets, const std::vector<std::string>& tasks,
                             const std::vector<std::uint8_t>& log_flags, const FusionSpec& fusion,
                             std::optional<PCAModel> pca, FFNConfig ffn_config, const TrainConfig& train_config) {
  check_rows(fused.values.rows(), targets, tasks, log_flags);
  if (training_rows.size() != fused.values.rows()) {
    throw Error(ErrorCode::kRowCountMismatch, "one training row id per fused row required");
  }
  FusedTrainResult result;
  FusedModel& m = result.model;
  m.tasks = tasks;
  m.layout = fused.layout;
  m.fusion = fusion;
  if (m.input_dim() != fused.values.cols()) throw Error(ErrorCode::kWidthMismatch, "layout does not match columns");
  if (fusion.mode == FusionMode::kPca) {
    if (pca) {
      assert_pca_within(*pca, training_rows);
      if (pca->n_components() != fusion.components) {
        throw Error(ErrorCode::kInvalidArgument, "pca model has a different component count");
      }
      m.pca = std::move(pca);
    } else {
      m.pca = pca_fit(fused.values, fusion.components, training_rows);
    }
  }
  const Matrix x = fused_input(m, fused.values);

  ffn_config.output_dim = static_cast<int>(targets.tasks());
  m.ffn_config = ffn_config;
  m.ffn = init_ffn(ffn_config, x.cols(), derive_seed(train_config.seed, {kFfnInit}));
  m.scaler = fit_scaler(targets, log_flags);
  m.train_config = train_config;

  const SparseTargets scaled = m.scaler.transform(targets);
  const std::vector<Parameter*> params = m.ffn.parameters();
  result.loss_trace = run_training(params, scaled, train_config, [&](Tape& tape, std::span<const std::size_t> rows) {
    return ffn_on_tape(tape, tape.input(select_rows(x, rows)), m.ffn, m.ffn_config);
  });
  return result;
}

Matrix predict_scaled(const FusedModel& model, const Matrix& fused) {
  const Matrix x = fused_input(model, fused);
  Tape tape;
  return tape.value(ffn_on_tape(tape, tape.input(x), model.ffn, model.ffn_config));
}

Matrix predict(const FusedModel& model, const Matrix& fused) {
  return model.scaler.inverse(predict_scaled(model, fused));
}

}  // namespace molfuse
