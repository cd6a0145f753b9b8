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

#ifndef MOLFUSE_FEATURES_H_
#define MOLFUSE_FEATURES_H_

#include "molfuse/matrix.h"
#include "molfuse/molgraph.h"

namespace molfuse {

// Atom row layout:
//   [0, 12)   element one-hot (11 elements + other)
//   [12, 18)  heavy-atom degree one-hot 0..5 (clipped)
//   [18, 23)  formal charge one-hot -2..+2
//   [23, 28)  hydrogen count one-hot 0..4 (clipped)
//   28        aromatic
//   29        in ring
//   30        mass / 100 (isotope mass number when given)
inline constexpr int kElementOffset = 0;
inline constexpr int kDegreeOffset = 12;
inline constexpr int kChargeOffset = 18;
inline constexpr int kHydrogenOffset = 23;
inline constexpr int kAromaticIndex = 28;
inline constexpr int kAtomRingIndex = 29;
inline constexpr int kMassIndex = 30;
inline constexpr int kAtomFeatureDim = 31;

// Bond row layout: order one-hot (single, double, triple, aromatic), in ring.
inline constexpr int kBondRingIndex = 4;
inline constexpr int kBondFeatureDim = 5;

struct FeatureVectors {
  Matrix atom_features;  // num_atoms x kAtomFeatureDim
  Matrix bond_features;  // num_bonds x kBondFeatureDim
};

FeatureVectors featurize(const MolecularGraph& graph);

}  // namespace molfuse

#endif  // MOLFUSE_FEATURES_H_
