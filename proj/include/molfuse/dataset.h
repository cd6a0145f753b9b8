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

#ifndef MOLFUSE_DATASET_H_
#define MOLFUSE_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "molfuse/dmpnn.h"
#include "molfuse/error.h"
#include "molfuse/molgraph.h"
#include "molfuse/targets.h"

namespace molfuse {

struct DroppedRow {
  std::size_t line = 0;  // 1-based line in the file
  std::string smiles;
  ErrorCode code = ErrorCode::kInvalidArgument;
  std::string message;
};

struct DatasetTable {
  std::vector<std::string> smiles;
  std::vector<MolecularGraph> graphs;
  std::vector<std::size_t> row_ids;  // 0-based data line index of each kept row
  std::vector<std::string> target_names;
  std::vector<std::uint8_t> log_flags;
  SparseTargets targets;
  std::vector<DroppedRow> dropped;

  std::size_t rows() const { return smiles.size(); }
  //! Throws InvalidArgument for an unknown column.
  std::size_t task_index(const std::string& name) const;
};

//! CSV with a header whose first column is "smiles"; an empty cell is a
//! missing target. Rows whose SMILES fails to parse, or which carry no
//! target at all, are dropped and recorded. Columns named in `log10_columns`
//! are flagged for log10 scaling. Throws MissingHeader, NoTargets,
//! AllRowsInvalid, and InvalidArgument for a malformed number or ragged row.
DatasetTable read_dataset(std::istream& in, const std::vector<std::string>& log10_columns = {});
DatasetTable load_dataset(const std::string& path, const std::vector<std::string>& log10_columns = {});

//! Restriction to the named columns (rows kept even if all of them are absent).
DatasetTable select_tasks(const DatasetTable& table, const std::vector<std::string>& names);

std::vector<PreparedMolecule> prepare_all(const DatasetTable& table);

}  // namespace molfuse

#endif  // MOLFUSE_DATASET_H_
