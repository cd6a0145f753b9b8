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

#include "molfuse/checkpoint.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "molfuse/error.h"
#include "molfuse/fingerprint.h"

namespace molfuse {

using nlohmann::json;

namespace {

std::string checksum(const json& payload) {
  const std::string text = payload.dump();
  const auto* p = reinterpret_cast<const std::uint8_t*>(text.data());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(std::span(p, text.size()))));
  return buf;
}

json parameter_to_json(const Parameter& p) { return {{"name", p.name}, {"value", matrix_to_json(p.value)}}; }

Parameter parameter_from_json(const json& j) {
  return Parameter(j.at("name").get<std::string>(), matrix_from_json(j.at("value")));
}

json scaler_to_json(const TargetScaler& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}, {"log10", s.log10}};
}

TargetScaler scaler_from_json(const json& j) {
  TargetScaler s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.stddev = j.at("stddev").get<std::vector<double>>();
  s.log10 = j.at("log10").get<std::vector<std::uint8_t>>();
  return s;
}

json ffn_config_to_json(const FFNConfig& c) {
  return {{"n_layers", c.n_layers}, {"width", c.width}, {"dropout", c.dropout}, {"output_dim", c.output_dim}};
}

FFNConfig ffn_config_from_json(const json& j) {
  return {j.at("n_layers").get<int>(), j.at("width").get<int>(), j.at("dropout").get<double>(),
          j.at("output_dim").get<int>()};
}

json ffn_to_json(const FFNWeights& w) {
  json layers = json::array();
  for (const Parameter& p : w.layers) layers.push_back(parameter_to_json(p));
  return layers;
}

FFNWeights ffn_from_json(const json& j) {
  FFNWeights w;
  for (const json& p : j) w.layers.push_back(parameter_from_json(p));
  return w;
}

json train_config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"adam", {{"lr", c.adam.lr}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const json& a = j.at("adam");
  c.adam = {a.at("lr").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
            a.at("eps").get<double>()};
  return c;
}

std::string wrap(const char* kind, json payload) {
  json doc;
  doc["format"] = kCheckpointFormat;
  doc["version"] = kCheckpointVersion;
  doc["kind"] = kind;
  doc["checksum"] = checksum(payload);
  doc["payload"] = std::move(payload);
  return doc.dump(1);
}

json unwrap(const std::string& text, const char* kind) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptCheckpoint, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != kCheckpointFormat) {
    throw Error(ErrorCode::kCorruptCheckpoint, "not a molfuse checkpoint");
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer()) {
    throw Error(ErrorCode::kCorruptCheckpoint, "checkpoint version missing");
  }
  if (doc["version"].get<int>() != kCheckpointVersion) {
    throw Error(ErrorCode::kVersionMismatch, "checkpoint version " + doc["version"].dump() + ", expected " +
                                                 std::to_string(kCheckpointVersion));
  }
  if (!doc.contains("payload") || !doc.contains("checksum") || !doc["checksum"].is_string() ||
      checksum(doc["payload"]) != doc["checksum"].get<std::string>()) {
    throw Error(ErrorCode::kCorruptCheckpoint, "checkpoint checksum mismatch");
  }
  if (kind != nullptr && doc.value("kind", "") != kind) {
    throw Error(ErrorCode::kCorruptCheckpoint, std::string("checkpoint is not of kind ") + kind);
  }
  return doc;
}

template <typename F>
auto guarded(F f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptCheckpoint, std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

Matrix matrix_from_json(const json& j) {
  try {
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("data").get<std::vector<double>>());
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptCheckpoint, e.what());
  }
}

std::string save_checkpoint(const GraphModel& m) {
  json payload;
  payload["model_kind"] = model_kind_name(m.kind);
  payload["tasks"] = m.tasks;
  payload["encoder_config"] = {{"hidden_size", m.encoder_config.hidden_size},
                               {"depth", m.encoder_config.depth},
                               {"seed", m.encoder_config.seed}};
  json enc = json::array();
  for (const Parameter* p : {&m.encoder.w_in, &m.encoder.b_in, &m.encoder.w_msg, &m.encoder.b_msg,
                             &m.encoder.w_atom, &m.encoder.b_atom}) {
    enc.push_back(parameter_to_json(*p));
  }
  payload["encoder"] = std::move(enc);
  payload["encoder_id"] = encoder_id(m.encoder);
  payload["ffn_config"] = ffn_config_to_json(m.ffn_config);
  payload["ffn"] = ffn_to_json(m.ffn);
  payload["scaler"] = scaler_to_json(m.scaler);
  payload["train_config"] = train_config_to_json(m.train_config);
  return wrap("graph", std::move(payload));
}

std::string save_checkpoint(const FusedModel& m) {
  json payload;
  payload["tasks"] = m.tasks;
  json layout = json::array();
  for (const BlockInfo& b : m.layout) {
    layout.push_back({{"label", b.label}, {"offset", b.offset}, {"width", b.width}, {"provenance", b.provenance}});
  }
  payload["layout"] = std::move(layout);
  payload["fusion"] = {{"mode", m.fusion.mode == FusionMode::kConcat ? "concat" : "pca"},
                       {"components", m.fusion.components}};
  if (m.pca) {
    payload["pca"] = {{"mean", m.pca->mean},
                      {"components", matrix_to_json(m.pca->components)},
                      {"explained_variance", m.pca->explained_variance},
                      {"provenance_rows", m.pca->provenance_rows}};
  } else {
    payload["pca"] = nullptr;
  }
  payload["ffn_config"] = ffn_config_to_json(m.ffn_config);
  payload["ffn"] = ffn_to_json(m.ffn);
  payload["scaler"] = scaler_to_json(m.scaler);
  payload["train_config"] = train_config_to_json(m.train_config);
  return wrap("fused", std::move(payload));
}

GraphModel load_graph_model(const std::string& text) {
  const json doc = unwrap(text, "graph");
  return guarded([&] {
    const json& p = doc.at("payload");
    GraphModel m;
    const std::string kind = p.at("model_kind").get<std::string>();
    if (kind != "st" && kind != "mt") throw Error(ErrorCode::kCorruptCheckpoint, "unknown model kind " + kind);
    m.kind = kind == "st" ? ModelKind::kSingleTask : ModelKind::kMultiTask;
    m.tasks = p.at("tasks").get<std::vector<std::string>>();
    const json& ec = p.at("encoder_config");
    m.encoder_config = {ec.at("hidden_size").get<int>(), ec.at("depth").get<int>(), ec.at("seed").get<std::uint64_t>()};
    const json& enc = p.at("encoder");
    if (enc.size() != 6) throw Error(ErrorCode::kCorruptCheckpoint, "encoder needs six parameters");
    Parameter* slots[] = {&m.encoder.w_in, &m.encoder.b_in, &m.encoder.w_msg,
                          &m.encoder.b_msg, &m.encoder.w_atom, &m.encoder.b_atom};
    for (std::size_t i = 0; i < 6; ++i) *slots[i] = parameter_from_json(enc[i]);
    if (encoder_id(m.encoder) != p.at("encoder_id").get<std::string>()) {
      throw Error(ErrorCode::kCorruptCheckpoint, "encoder id does not match weights");
    }
    m.ffn_config = ffn_config_from_json(p.at("ffn_config"));
    m.ffn = ffn_from_json(p.at("ffn"));
    m.scaler = scaler_from_json(p.at("scaler"));
    m.train_config = train_config_from_json(p.at("train_config"));
    return m;
  });
}

FusedModel load_fused_model(const std::string& text) {
  const json doc = unwrap(text, "fused");
  return guarded([&] {
    const json& p = doc.at("payload");
    FusedModel m;
    m.tasks = p.at("tasks").get<std::vector<std::string>>();
    for (const json& b : p.at("layout")) {
      m.layout.push_back({b.at("label").get<std::string>(), b.at("offset").get<std::size_t>(),
                          b.at("width").get<std::size_t>(), b.at("provenance").get<std::string>()});
    }
    const json& f = p.at("fusion");
    m.fusion.mode = f.at("mode").get<std::string>() == "pca" ? FusionMode::kPca : FusionMode::kConcat;
    m.fusion.components = f.at("components").get<std::size_t>();
    if (!p.at("pca").is_null()) {
      const json& q = p.at("pca");
      PCAModel pca;
      pca.mean = q.at("mean").get<std::vector<double>>();
      pca.components = matrix_from_json(q.at("components"));
      pca.explained_variance = q.at("explained_variance").get<std::vector<double>>();
      pca.provenance_rows = q.at("provenance_rows").get<std::vector<std::size_t>>();
      m.pca = std::move(pca);
    }
    if (m.fusion.mode == FusionMode::kPca && !m.pca) {
      throw Error(ErrorCode::kCorruptCheckpoint, "pca-mode checkpoint without a pca model");
    }
    m.ffn_config = ffn_config_from_json(p.at("ffn_config"));
    m.ffn = ffn_from_json(p.at("ffn"));
    m.scaler = scaler_from_json(p.at("scaler"));
    m.train_config = train_config_from_json(p.at("train_config"));
    return m;
  });
}

std::string checkpoint_kind(const std::string& text) {
  return unwrap(text, nullptr).at("kind").get<std::string>();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kInvalidArgument, "failed writing " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace molfuse
