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

#ifndef MOLFUSE_CURATION_H_
#define MOLFUSE_CURATION_H_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "molfuse/fingerprint.h"
#include "molfuse/molgraph.h"

namespace molfuse {

struct Composition {
  std::array<int, kNumElements> heavy{};  // indexed by Element
  int hydrogen = 0;
  int n_atoms = 0;

  int count(Element e) const { return heavy[static_cast<std::size_t>(e)]; }
};

//! Element counts including implicit hydrogens.
Composition composition(const MolecularGraph& graph);

struct Descriptors {
  double ob100 = 0.0;      // 100 * (nO - 2 nC - nH / 2) / n_atoms
  double mw = 0.0;         // sum of standard atomic masses
  double n_percent = 0.0;  // nitrogen mass percent

  bool operator==(const Descriptors&) const = default;
};

Descriptors composition_descriptors(const MolecularGraph& graph);
Descriptors composition_descriptors(const Composition& c);

inline constexpr double kOxygenBalanceThreshold = -60.0;

//! Indices (ascending) of the rows with OB100 strictly above `threshold`.
std::vector<std::size_t> filter_oxygen_balance(std::span<const Descriptors> rows,
                                               double threshold = kOxygenBalanceThreshold);

//! Highest Tanimoto similarity to any reference. Throws EmptyReferenceSet.
double max_similarity(const Fingerprint& candidate, std::span<const Fingerprint> references);

struct ScoredMolecule {
  std::string smiles;
  Descriptors descriptors;
  double similarity = 0.0;
};

enum class Axis { kOb100, kMw, kNPercent };

const char* axis_name(Axis axis);
double axis_value(const Descriptors& d, Axis axis);

//! Equal-width 2-D grid. Bins are right-open except the last, which is
//! right-closed; values outside the edges clamp to the outer bins.
struct BucketGrid {
  Axis x_axis = Axis::kOb100;
  Axis y_axis = Axis::kMw;
  std::vector<double> x_edges;
  std::vector<double> y_edges;
  std::size_t cap = 0;

  std::size_t x_bins() const { return x_edges.size() - 1; }
  std::size_t y_bins() const { return y_edges.size() - 1; }
  //! Flattened bucket index x_bin * y_bins + y_bin.
  std::size_t bucket_of(const Descriptors& d) const;
};

//! Edges span the observed min/max of `rows`; a zero-width range is widened
//! by 0.5 on each side.
BucketGrid make_grid(std::span<const ScoredMolecule> rows, Axis x, Axis y, std::size_t cap, std::size_t bins = 10);

//! Per bucket, rows ordered by similarity descending (ties by input order);
//! the first `cap` are kept. Returns kept indices in ascending order.
std::vector<std::size_t> bucket_select(std::span<const ScoredMolecule> rows, const BucketGrid& grid);

struct BucketCount {
  std::size_t bucket = 0;
  std::size_t before = 0;
  std::size_t after = 0;
};

struct CurationStage {
  BucketGrid grid;
  std::vector<std::size_t> kept;     // indices into the original input, ascending
  std::vector<BucketCount> census;   // non-empty buckets only, by bucket index
};

struct CurationResult {
  CurationStage ob_mw;
  CurationStage mw_n;
};

//! OB100 x MW selection with `cap1`, then MW x N% selection with `cap2` over
//! the survivors (grid rebuilt from the survivors).
CurationResult two_stage_select(std::span<const ScoredMolecule> rows, std::size_t cap1 = 225,
                                std::size_t cap2 = 97, std::size_t bins = 10);

}  // namespace molfuse

#endif  // MOLFUSE_CURATION_H_
