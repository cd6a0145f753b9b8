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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "molfuse/curation.h"
#include "molfuse/error.h"
#include "molfuse/fingerprint.h"
#include "molfuse/molgraph.h"
#include "molgen.h"
#include "oracles.h"

namespace molfuse {
namespace {

std::vector<ScoredMolecule> uniform_rows(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ScoredMolecule> rows(n);
  for (ScoredMolecule& r : rows) {
    r.descriptors = {rng.uniform(-200, 20), rng.uniform(50, 600), rng.uniform(0, 60)};
    // Coarse scores so that ties occur.
    r.similarity = std::floor(rng.uniform() * 50.0) / 50.0;
  }
  return rows;
}

// Linear scan over the edges, independent of BucketGrid::bucket_of.
std::size_t scan_bin(const std::vector<double>& edges, double v) {
  const std::size_t bins = edges.size() - 1;
  if (v >= edges[bins]) return bins - 1;
  for (std::size_t b = bins; b-- > 0;) {
    if (v >= edges[b]) return b;
  }
  return 0;
}

std::size_t scan_bucket(const BucketGrid& g, const Descriptors& d) {
  return scan_bin(g.x_edges, axis_value(d, g.x_axis)) * g.y_bins() + scan_bin(g.y_edges, axis_value(d, g.y_axis));
}

// Recounts every bucket from scratch and checks the cap and dominance rules.
void check_stage(std::span<const ScoredMolecule> rows, const std::vector<std::size_t>& input,
                 const CurationStage& stage) {
  const std::set<std::size_t> kept(stage.kept.begin(), stage.kept.end());
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t i : input) members[scan_bucket(stage.grid, rows[i].descriptors)].push_back(i);
  std::size_t census_rows = 0;
  for (const auto& [bucket, idx] : members) {
    std::size_t n_kept = 0;
    double min_kept = 2.0, max_dropped = -1.0;
    for (std::size_t i : idx) {
      if (kept.count(i)) {
        ++n_kept;
        min_kept = std::min(min_kept, rows[i].similarity);
      } else {
        max_dropped = std::max(max_dropped, rows[i].similarity);
      }
    }
    EXPECT_LE(n_kept, stage.grid.cap);
    EXPECT_EQ(n_kept, std::min(stage.grid.cap, idx.size()));
    if (n_kept > 0) EXPECT_LE(max_dropped, min_kept);
    ++census_rows;
  }
  EXPECT_EQ(stage.census.size(), census_rows);
  for (const BucketCount& c : stage.census) {
    ASSERT_TRUE(members.count(c.bucket));
    EXPECT_EQ(c.before, members[c.bucket].size());
    EXPECT_LE(c.after, stage.grid.cap);
  }
  for (std::size_t i : stage.kept) EXPECT_TRUE(std::binary_search(input.begin(), input.end(), i));
}

TEST(Descriptors, HandExamples) {
  const Descriptors co2 = composition_descriptors(parse_smiles("O=C=O"));
  EXPECT_DOUBLE_EQ(co2.ob100, 0.0);

  const Descriptors tnt = composition_descriptors(parse_smiles("Cc1c(cc(cc1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]"));
  EXPECT_NEAR(tnt.ob100, 100.0 * (6 - 14 - 2.5) / 21.0, 1e-12);
  EXPECT_NEAR(tnt.ob100, -50.0, 1e-12);

  const Descriptors hydrazine = composition_descriptors(parse_smiles("NN"));
  EXPECT_NEAR(hydrazine.n_percent, 100.0 * 28.014 / 32.046, 1e-3);
  EXPECT_NEAR(hydrazine.n_percent, 87.42, 5e-3);
  EXPECT_NEAR(hydrazine.mw, 32.046, 2e-3);
}

TEST(Descriptors, CompositionMatchesGenerator) {
  for (const auto& m : testing::random_molecules(300, 3)) {
    const Composition c = composition(parse_smiles(m.smiles));
    EXPECT_EQ(c.count(Element::C), m.n_c) << m.smiles;
    EXPECT_EQ(c.count(Element::N), m.n_n);
    EXPECT_EQ(c.count(Element::O), m.n_o);
    EXPECT_EQ(c.hydrogen, m.n_h);
    EXPECT_EQ(c.n_atoms, m.n_c + m.n_n + m.n_o + m.n_h);
    EXPECT_NEAR(composition_descriptors(c).ob100, testing::oxygen_balance(m.n_c, m.n_h, m.n_n, m.n_o), 1e-12);
  }
}

TEST(Descriptors, OxygenBalanceFilter) {
  const std::vector<Descriptors> rows{{-60.0, 1, 0}, {-59.9, 1, 0}, {-100, 1, 0}, {5, 1, 0}};
  EXPECT_EQ(filter_oxygen_balance(rows), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(filter_oxygen_balance(rows, -200), (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Similarity, MaxOverReferences) {
  const Fingerprint a = morgan_fingerprint(parse_smiles("CCO"));
  const Fingerprint b = morgan_fingerprint(parse_smiles("c1ccccc1"));
  const Fingerprint c = morgan_fingerprint(parse_smiles("CCN"));
  const std::vector<Fingerprint> refs{b, a, c};
  EXPECT_EQ(max_similarity(a, refs), 1.0);

  Fingerprint x(2048, 5), y(2048, 5);
  x.set(1);
  y.set(2);
  EXPECT_EQ(max_similarity(x, std::vector<Fingerprint>{y}), 0.0);

  // Bit sets with Tanimoto 0.2, 0.7 and 0.5 against the candidate.
  Fingerprint cand(2048, 5);
  for (int i = 0; i < 10; ++i) cand.set(i);
  std::vector<Fingerprint> scored(3, Fingerprint(2048, 5));
  for (int i = 0; i < 2; ++i) scored[0].set(i);
  for (int i = 0; i < 7; ++i) scored[1].set(i);
  for (int i = 0; i < 5; ++i) scored[2].set(i);
  EXPECT_DOUBLE_EQ(max_similarity(cand, scored), 0.7);

  try {
    max_similarity(a, std::vector<Fingerprint>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyReferenceSet);
  }
}

TEST(BucketSelect, Examples) {
  std::vector<ScoredMolecule> rows(3);
  rows[0].similarity = 0.1;
  rows[1].similarity = 0.9;
  rows[2].similarity = 0.5;
  BucketGrid grid = make_grid(rows, Axis::kOb100, Axis::kMw, 5);
  EXPECT_EQ(bucket_select(rows, grid), (std::vector<std::size_t>{0, 1, 2}));
  grid.cap = 2;
  EXPECT_EQ(bucket_select(rows, grid), (std::vector<std::size_t>{1, 2}));
  // Ties keep the earlier row.
  rows[0].similarity = 0.5;
  EXPECT_EQ(bucket_select(rows, grid), (std::vector<std::size_t>{0, 1}));
}

TEST(BucketSelect, GridEdgesAndMembership) {
  const std::vector<ScoredMolecule> rows = uniform_rows(500, 4);
  const BucketGrid g = make_grid(rows, Axis::kMw, Axis::kNPercent, 10);
  ASSERT_EQ(g.x_edges.size(), 11u);
  for (std::size_t i = 1; i < g.x_edges.size(); ++i) EXPECT_GT(g.x_edges[i], g.x_edges[i - 1]);
  double lo = 1e9, hi = -1e9;
  for (const ScoredMolecule& r : rows) {
    lo = std::min(lo, r.descriptors.mw);
    hi = std::max(hi, r.descriptors.mw);
    EXPECT_EQ(g.bucket_of(r.descriptors), scan_bucket(g, r.descriptors));
  }
  EXPECT_EQ(g.x_edges.front(), lo);
  EXPECT_EQ(g.x_edges.back(), hi);

  // A constant axis still yields a valid grid.
  std::vector<ScoredMolecule> flat(4);
  for (std::size_t i = 0; i < 4; ++i) flat[i].descriptors = {-10, 100, static_cast<double>(i)};
  const BucketGrid fg = make_grid(flat, Axis::kOb100, Axis::kMw, 2);
  EXPECT_LT(fg.x_edges.front(), -10.0);
  EXPECT_GT(fg.x_edges.back(), -10.0);
}

TEST(BucketSelect, TwoStageInvariants) {
  const std::vector<ScoredMolecule> rows = uniform_rows(10000, 5);
  const CurationResult r = two_stage_select(rows, 225, 97);
  std::vector<std::size_t> all(rows.size());
  std::iota(all.begin(), all.end(), 0);
  check_stage(rows, all, r.ob_mw);
  check_stage(rows, r.ob_mw.kept, r.mw_n);
  EXPECT_LT(r.mw_n.kept.size(), r.ob_mw.kept.size());
  EXPECT_EQ(r.ob_mw.grid.cap, 225u);
  EXPECT_EQ(r.mw_n.grid.x_axis, Axis::kMw);
  EXPECT_EQ(r.mw_n.grid.y_axis, Axis::kNPercent);

  const CurationResult again = two_stage_select(rows, 225, 97);
  EXPECT_EQ(again.mw_n.kept, r.mw_n.kept);
  EXPECT_EQ(again.ob_mw.kept, r.ob_mw.kept);
}

TEST(BucketSelect, AddingARowKeepsStrictlyBetterRows) {
  std::vector<ScoredMolecule> rows = uniform_rows(2000, 6);
  const BucketGrid grid = make_grid(rows, Axis::kOb100, Axis::kMw, 8);
  const std::vector<std::size_t> before = bucket_select(rows, grid);
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ScoredMolecule> more = rows;
    ScoredMolecule extra = rows[rng.below(rows.size())];
    extra.similarity = rng.uniform();
    more.push_back(extra);
    const std::vector<std::size_t> after = bucket_select(more, grid);
    const std::size_t bucket = grid.bucket_of(extra.descriptors);
    for (std::size_t i : before) {
      if (grid.bucket_of(rows[i].descriptors) == bucket && rows[i].similarity > extra.similarity) {
        EXPECT_TRUE(std::binary_search(after.begin(), after.end(), i));
      }
    }
  }
}

}  // namespace
}  // namespace molfuse
