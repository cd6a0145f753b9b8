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

#ifndef MOLFUSE_CHECKPOINT_H_
#define MOLFUSE_CHECKPOINT_H_

#include <string>

#include "json.hpp"
#include "molfuse/models.h"

namespace molfuse {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "molfuse-checkpoint";

//! Document layout:
//!   {"format": ..., "version": 1, "kind": "graph" | "fused",
//!    "payload": {...}, "checksum": fnv1a64 hex of payload.dump()}
//! Matrices are {"rows", "cols", "data"} with row-major data.
std::string save_checkpoint(const GraphModel& model);
std::string save_checkpoint(const FusedModel& model);

//! Throws VersionMismatch for another version, CorruptCheckpoint for a
//! checksum mismatch, wrong kind, or malformed content.
GraphModel load_graph_model(const std::string& text);
FusedModel load_fused_model(const std::string& text);

//! Kind recorded in a checkpoint ("graph" or "fused").
std::string checkpoint_kind(const std::string& text);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace molfuse

#endif  // MOLFUSE_CHECKPOINT_H_
