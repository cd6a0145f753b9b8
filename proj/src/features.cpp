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

#include "molfuse/features.h"

#include <algorithm>

namespace molfuse {

FeatureVectors featurize(const MolecularGraph& graph) {
  FeatureVectors out{Matrix(graph.num_atoms(), kAtomFeatureDim), Matrix(graph.num_bonds(), kBondFeatureDim)};

  for (int i = 0; i < graph.num_atoms(); ++i) {
    const Atom& atom = graph.atoms()[i];
    auto row = out.atom_features.row(i);
    row[kElementOffset + static_cast<int>(atom.element)] = 1.0;
    row[kDegreeOffset + std::min(graph.degree(i), 5)] = 1.0;
    row[kChargeOffset + std::clamp(atom.formal_charge, -2, 2) + 2] = 1.0;
    row[kHydrogenOffset + std::min(atom.implicit_h, 4)] = 1.0;
    row[kAromaticIndex] = atom.aromatic ? 1.0 : 0.0;
    row[kAtomRingIndex] = atom.in_ring ? 1.0 : 0.0;
    const double mass = atom.isotope ? static_cast<double>(*atom.isotope) : atomic_mass(atom.element);
    row[kMassIndex] = mass / 100.0;
  }

  for (int b = 0; b < graph.num_bonds(); ++b) {
    const Bond& bond = graph.bonds()[b];
    auto row = out.bond_features.row(b);
    row[static_cast<int>(bond.order)] = 1.0;
    row[kBondRingIndex] = bond.in_ring ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace molfuse
