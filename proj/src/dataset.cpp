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

#include "molfuse/dataset.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace molfuse {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_number(const std::string& cell, std::size_t line) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidArgument, "line " + std::to_string(line) + ": bad number '" + cell + "'");
  }
  return v;
}

}  // namespace

std::size_t DatasetTable::task_index(const std::string& name) const {
  const auto it = std::find(target_names.begin(), target_names.end(), name);
  if (it == target_names.end()) throw Error(ErrorCode::kInvalidArgument, "unknown target column '" + name + "'");
  return static_cast<std::size_t>(it - target_names.begin());
}

DatasetTable read_dataset(std::istream& in, const std::vector<std::string>& log10_columns) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kMissingHeader, "empty dataset file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = split_csv(line);
  for (std::string& h : header) h = trim(h);
  if (header.empty() || header.front() != "smiles") {
    throw Error(ErrorCode::kMissingHeader, "first header column must be 'smiles'");
  }
  if (header.size() < 2) throw Error(ErrorCode::kNoTargets, "dataset has no target columns");

  DatasetTable table;
  table.target_names.assign(header.begin() + 1, header.end());
  for (const std::string& name : table.target_names) {
    table.log_flags.push_back(
        std::find(log10_columns.begin(), log10_columns.end(), name) != log10_columns.end() ? 1 : 0);
  }
  for (const std::string& c : log10_columns) table.task_index(c);
  const std::size_t n_tasks = table.target_names.size();

  std::vector<double> values;
  std::vector<std::uint8_t> mask;
  std::size_t line_no = 1, data_index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::size_t this_index = data_index++;
    std::vector<std::string> cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kInvalidArgument, "line " + std::to_string(line_no) + ": expected " +
                                                   std::to_string(header.size()) + " cells");
    }
    const std::string smiles = trim(cells[0]);
    std::vector<double> row_values(n_tasks, 0.0);
    std::vector<std::uint8_t> row_mask(n_tasks, 0);
    for (std::size_t j = 0; j < n_tasks; ++j) {
      const std::string cell = trim(cells[j + 1]);
      if (cell.empty()) continue;
      row_values[j] = parse_number(cell, line_no);
      row_mask[j] = 1;
    }
    try {
      MolecularGraph g = parse_smiles(smiles);
      if (g.num_atoms() == 0) throw Error(ErrorCode::kEmptyGraph, "molecule has no atoms");
      if (std::none_of(row_mask.begin(), row_mask.end(), [](std::uint8_t m) { return m != 0; })) {
        throw Error(ErrorCode::kNoTargets, "row has no target values");
      }
      table.graphs.push_back(std::move(g));
    } catch (const Error& e) {
      table.dropped.push_back({line_no, smiles, e.code(), e.what()});
      continue;
    }
    table.smiles.push_back(smiles);
    table.row_ids.push_back(this_index);
    values.insert(values.end(), row_values.begin(), row_values.end());
    mask.insert(mask.end(), row_mask.begin(), row_mask.end());
  }
  if (table.smiles.empty()) throw Error(ErrorCode::kAllRowsInvalid, "no valid rows in dataset");
  table.targets = SparseTargets(Matrix(table.smiles.size(), n_tasks, std::move(values)), std::move(mask));
  return table;
}

DatasetTable load_dataset(const std::string& path, const std::vector<std::string>& log10_columns) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open " + path);
  return read_dataset(in, log10_columns);
}

DatasetTable select_tasks(const DatasetTable& table, const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const std::string& n : names) idx.push_back(table.task_index(n));
  DatasetTable out = table;
  out.target_names = names;
  out.log_flags.clear();
  for (std::size_t i : idx) out.log_flags.push_back(table.log_flags[i]);
  out.targets = select_tasks(table.targets, idx);
  return out;
}

std::vector<PreparedMolecule> prepare_all(const DatasetTable& table) {
  std::vector<PreparedMolecule> out;
  out.reserve(table.graphs.size());
  for (const MolecularGraph& g : table.graphs) out.push_back(prepare_molecule(g));
  return out;
}

}  // namespace molfuse
