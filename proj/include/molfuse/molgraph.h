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

#ifndef MOLFUSE_MOLGRAPH_H_
#define MOLFUSE_MOLGRAPH_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace molfuse {

//! Heavy elements accepted by the parser. The numeric values index the
//! element one-hot block of the atom features.
enum class Element : std::uint8_t { B, C, N, O, F, Si, P, S, Cl, Br, I };

inline constexpr int kNumElements = 11;

std::string_view element_symbol(Element e);

//! Standard atomic weight (g/mol).
double atomic_mass(Element e);
inline constexpr double kHydrogenMass = 1.008;

enum class BondOrder : std::uint8_t { kSingle, kDouble, kTriple, kAromatic };

struct Atom {
  Element element = Element::C;
  int formal_charge = 0;
  bool aromatic = false;
  int implicit_h = 0;
  std::optional<int> isotope;
  bool in_ring = false;

  bool operator==(const Atom&) const = default;
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::kSingle;
  bool in_ring = false;

  bool operator==(const Bond&) const = default;
};

struct Neighbor {
  int atom;
  int bond;

  bool operator==(const Neighbor&) const = default;
};

//! Hydrogen-suppressed molecular graph. Immutable once built; construct via
//! parse_smiles() or MolecularGraph::from_parts().
class MolecularGraph {
 public:
  MolecularGraph() = default;

  //! Builds adjacency and perceives ring membership (bridge detection).
  //! Atom/bond ring flags in the inputs are recomputed.
  static MolecularGraph from_parts(std::vector<Atom> atoms, std::vector<Bond> bonds);

  std::span<const Atom> atoms() const { return atoms_; }
  std::span<const Bond> bonds() const { return bonds_; }
  std::span<const Neighbor> neighbors(int atom) const { return adjacency_[atom]; }

  int num_atoms() const { return static_cast<int>(atoms_.size()); }
  int num_bonds() const { return static_cast<int>(bonds_.size()); }
  int degree(int atom) const { return static_cast<int>(adjacency_[atom].size()); }

  bool operator==(const MolecularGraph& other) const {
    return atoms_ == other.atoms_ && bonds_ == other.bonds_;
  }

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

//! Parses the supported SMILES subset: organic-subset and bracket atoms
//! (isotope, chirality, H count, charge, atom class), branches, ring closures
//! (digits and %nn) and the bond symbols - = # : / \.
//!
//! Stereo markers are read and dropped. Aromaticity is taken from lowercase
//! notation. Implicit hydrogens follow the default-valence model; bracket
//! atoms carry exactly the hydrogens written.
//!
//! Throws ParseError with one of:
//!   UnmatchedBracket   unbalanced ( ) or [ ], empty branch, dangling bond
//!   UnclosedRing       ring digit left open, or a closure onto the same atom
//!                      or an already bonded pair
//!   UnknownElement     symbol outside {B,C,N,O,F,Si,P,S,Cl,Br,I}, or any
//!                      character outside the grammar
//!   ValenceViolation   bond orders, hydrogens and charge exceed the allowed
//!                      valence, or |charge| > 2
//!   MultiFragmentInput the input contains '.'
MolecularGraph parse_smiles(std::string_view text);

//! Relabels atoms so that new atom i is old atom order[i]. Bonds are
//! re-listed in sorted order of their new endpoints.
MolecularGraph permute_atoms(const MolecularGraph& graph, std::span<const int> order);

//! Total hydrogen count (implicit, including bracket H).
int total_hydrogens(const MolecularGraph& graph);

}  // namespace molfuse

#endif  // MOLFUSE_MOLGRAPH_H_
