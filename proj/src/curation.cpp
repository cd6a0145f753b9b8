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

#include "molfuse/curation.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "molfuse/error.h"

namespace molfuse {

namespace {

constexpr double kNitrogenMass = 14.007;

std::size_t bin_of(const std::vector<double>& edges, double v) {
  const std::size_t bins = edges.size() - 1;
  if (v <= edges.front()) return 0;
  if (v >= edges.back()) return bins - 1;
  // First edge strictly greater than v closes the bin.
  const auto it = std::upper_bound(edges.begin(), edges.end(), v);
  return std::min(bins - 1, static_cast<std::size_t>(it - edges.begin()) - 1);
}

std::vector<double> equal_edges(double lo, double hi, std::size_t bins) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  edges.back() = hi;
  return edges;
}

CurationStage run_stage(std::span<const ScoredMolecule> all, const std::vector<std::size_t>& input, Axis x, Axis y,
                        std::size_t cap, std::size_t bins) {
  std::vector<ScoredMolecule> rows;
  rows.reserve(input.size());
  for (std::size_t i : input) rows.push_back(all[i]);
  CurationStage stage;
  stage.grid = make_grid(rows, x, y, cap, bins);
  const std::vector<std::size_t> kept = bucket_select(rows, stage.grid);

  std::map<std::size_t, BucketCount> census;
  for (const ScoredMolecule& r : rows) {
    BucketCount& c = census[stage.grid.bucket_of(r.descriptors)];
    ++c.before;
  }
  for (std::size_t k : kept) {
    ++census[stage.grid.bucket_of(rows[k].descriptors)].after;
    stage.kept.push_back(input[k]);
  }
  for (auto& [bucket, c] : census) {
    c.bucket = bucket;
    stage.census.push_back(c);
  }
  return stage;
}

}  // namespace

Composition composition(const MolecularGraph& graph) {
  Composition c;
  for (const Atom& a : graph.atoms()) {
    ++c.heavy[static_cast<std::size_t>(a.element)];
    c.hydrogen += a.implicit_h;
  }
  c.n_atoms = c.hydrogen + static_cast<int>(graph.num_atoms());
  return c;
}

Descriptors composition_descriptors(const Composition& c) {
  Descriptors d;
  if (c.n_atoms == 0) return d;
  const double n_o = c.count(Element::O);
  const double n_c = c.count(Element::C);
  d.ob100 = 100.0 * (n_o - 2.0 * n_c - c.hydrogen / 2.0) / c.n_atoms;
  for (std::size_t e = 0; e < kNumElements; ++e) d.mw += c.heavy[e] * atomic_mass(static_cast<Element>(e));
  d.mw += c.hydrogen * kHydrogenMass;
  d.n_percent = 100.0 * c.count(Element::N) * kNitrogenMass / d.mw;
  return d;
}

Descriptors composition_descriptors(const MolecularGraph& graph) {
  return composition_descriptors(composition(graph));
}

std::vector<std::size_t> filter_oxygen_balance(std::span<const Descriptors> rows, double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].ob100 > threshold) out.push_back(i);
  }
  return out;
}

double max_similarity(const Fingerprint& candidate, std::span<const Fingerprint> references) {
  if (references.empty()) throw Error(ErrorCode::kEmptyReferenceSet, "reference set is empty");
  double best = 0.0;
  for (const Fingerprint& r : references) best = std::max(best, tanimoto(candidate, r));
  return best;
}

const char* axis_name(Axis axis) {
  switch (axis) {
    case Axis::kOb100:
      return "OB100";
    case Axis::kMw:
      return "MW";
    case Axis::kNPercent:
      return "N%";
  }
  return "?";
}

double axis_value(const Descriptors& d, Axis axis) {
  switch (axis) {
    case Axis::kOb100:
      return d.ob100;
    case Axis::kMw:
      return d.mw;
    case Axis::kNPercent:
      return d.n_percent;
  }
  return 0.0;
}

std::size_t BucketGrid::bucket_of(const Descriptors& d) const {
  return bin_of(x_edges, axis_value(d, x_axis)) * y_bins() + bin_of(y_edges, axis_value(d, y_axis));
}

BucketGrid make_grid(std::span<const ScoredMolecule> rows, Axis x, Axis y, std::size_t cap, std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::kInvalidArgument, "grid needs at least one bin");
  BucketGrid g;
  g.x_axis = x;
  g.y_axis = y;
  g.cap = cap;
  double x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double xv = axis_value(rows[i].descriptors, x);
    const double yv = axis_value(rows[i].descriptors, y);
    if (!std::isfinite(xv) || !std::isfinite(yv)) {
      throw Error(ErrorCode::kNonFiniteValue, "descriptor is not finite");
    }
    x_lo = i == 0 ? xv : std::min(x_lo, xv);
    x_hi = i == 0 ? xv : std::max(x_hi, xv);
    y_lo = i == 0 ? yv : std::min(y_lo, yv);
    y_hi = i == 0 ? yv : std::max(y_hi, yv);
  }
  g.x_edges = equal_edges(x_lo, x_hi, bins);
  g.y_edges = equal_edges(y_lo, y_hi, bins);
  return g;
}

std::vector<std::size_t> bucket_select(std::span<const ScoredMolecule> rows, const BucketGrid& grid) {
  std::map<std::size_t, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < rows.size(); ++i) buckets[grid.bucket_of(rows[i].descriptors)].push_back(i);
  std::vector<std::size_t> kept;
  for (auto& [bucket, members] : buckets) {
    std::stable_sort(members.begin(), members.end(),
                     [&](std::size_t a, std::size_t b) { return rows[a].similarity > rows[b].similarity; });
    const std::size_t n = std::min(grid.cap, members.size());
    kept.insert(kept.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n));
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

CurationResult two_stage_select(std::span<const ScoredMolecule> rows, std::size_t cap1, std::size_t cap2,
                                std::size_t bins) {
  std::vector<std::size_t> all(rows.size());
  std::iota(all.begin(), all.end(), 0);
  CurationResult out;
  out.ob_mw = run_stage(rows, all, Axis::kOb100, Axis::kMw, cap1, bins);
  out.mw_n = run_stage(rows, out.ob_mw.kept, Axis::kMw, Axis::kNPercent, cap2, bins);
  return out;
}

}  // namespace molfuse
