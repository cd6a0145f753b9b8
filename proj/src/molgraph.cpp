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

#include "molfuse/molgraph.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>

#include "molfuse/error.h"

namespace molfuse {

namespace {

struct ElementInfo {
  std::string_view symbol;
  double mass;
  int group;                       // 13..17
  std::array<int, 3> valences;     // default valences, 0-terminated
};

constexpr std::array<ElementInfo, kNumElements> kElements = {{
    {"B", 10.811, 13, {3, 0, 0}},
    {"C", 12.011, 14, {4, 0, 0}},
    {"N", 14.007, 15, {3, 5, 0}},
    {"O", 15.999, 16, {2, 0, 0}},
    {"F", 18.998, 17, {1, 0, 0}},
    {"Si", 28.085, 14, {4, 0, 0}},
    {"P", 30.974, 15, {3, 5, 0}},
    {"S", 32.06, 16, {2, 4, 6}},
    {"Cl", 35.45, 17, {1, 0, 0}},
    {"Br", 79.904, 17, {1, 0, 0}},
    {"I", 126.904, 17, {1, 0, 0}},
}};

const ElementInfo& info(Element e) { return kElements[static_cast<int>(e)]; }

std::optional<Element> lookup_symbol(std::string_view sym) {
  for (int i = 0; i < kNumElements; ++i) {
    if (kElements[i].symbol == sym) return static_cast<Element>(i);
  }
  return std::nullopt;
}

// Allowed valences for a (possibly charged) element, ascending. Charge
// shifts follow the isoelectronic rule: group 13 loses valence with positive
// charge, group 14 loses valence with either sign, groups 15-17 gain valence
// with positive charge.
std::vector<int> allowed_valences(Element e, int charge) {
  const ElementInfo& el = info(e);
  std::vector<int> out;
  for (int v : el.valences) {
    if (v == 0) break;
    int shifted = v;
    if (el.group == 13) {
      shifted = v - charge;
    } else if (el.group == 14) {
      shifted = v - std::abs(charge);
    } else {
      shifted = v + charge;
    }
    if (shifted >= 0) out.push_back(shifted);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int bond_valence(BondOrder order) {
  switch (order) {
    case BondOrder::kSingle:
    case BondOrder::kAromatic:
      return 1;
    case BondOrder::kDouble:
      return 2;
    case BondOrder::kTriple:
      return 3;
  }
  return 1;
}

struct RawAtom {
  Atom atom;
  bool bracket = false;
  std::size_t offset = 0;
};

struct RawBond {
  int a;
  int b;
  BondOrder order;
  bool implicit_aromatic;
};

struct RingOpen {
  int atom = -1;
  std::optional<BondOrder> order;
  std::size_t offset = 0;
};

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view text) : text_(text) {}

  MolecularGraph run() {
    if (text_.empty()) fail(ErrorCode::kUnknownElement, 0, "empty input");
    while (pos_ < text_.size()) step();
    finish_syntax();
    return build();
  }

 private:
  [[noreturn]] void fail(ErrorCode code, std::size_t offset, const std::string& what) const {
    throw ParseError(code, offset, what);
  }

  void step() {
    const char c = text_[pos_];
    switch (c) {
      case '(':
        if (prev_ < 0) fail(ErrorCode::kUnmatchedBracket, pos_, "branch without a preceding atom");
        if (pending_) fail(ErrorCode::kUnmatchedBracket, pos_, "bond symbol before branch");
        if (pos_ + 1 < text_.size() && text_[pos_ + 1] == ')') {
          fail(ErrorCode::kUnmatchedBracket, pos_, "empty branch");
        }
        branches_.push_back({prev_, pos_});
        ++pos_;
        return;
      case ')':
        if (branches_.empty()) fail(ErrorCode::kUnmatchedBracket, pos_, "unmatched ')'");
        if (pending_) fail(ErrorCode::kUnmatchedBracket, pending_offset_, "dangling bond");
        prev_ = branches_.back().first;
        branches_.pop_back();
        ++pos_;
        return;
      case '-':
      case '/':
      case '\\':
        set_bond(BondOrder::kSingle);
        return;
      case '=':
        set_bond(BondOrder::kDouble);
        return;
      case '#':
        set_bond(BondOrder::kTriple);
        return;
      case ':':
        set_bond(BondOrder::kAromatic);
        return;
      case '.':
        fail(ErrorCode::kMultiFragmentInput, pos_, "multi-fragment input");
      case '[':
        bracket_atom();
        return;
      case ']':
        fail(ErrorCode::kUnmatchedBracket, pos_, "unmatched ']'");
      case '%':
        ring_bond();
        return;
      default:
        break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ring_bond();
      return;
    }
    organic_atom();
  }

  void set_bond(BondOrder order) {
    if (prev_ < 0) fail(ErrorCode::kUnmatchedBracket, pos_, "bond without a preceding atom");
    if (pending_) fail(ErrorCode::kUnmatchedBracket, pos_, "consecutive bond symbols");
    pending_ = order;
    pending_offset_ = pos_;
    ++pos_;
  }

  void organic_atom() {
    const std::size_t start = pos_;
    const char c = text_[pos_];
    Atom atom;
    if (c == 'C' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'l') {
      atom.element = Element::Cl;
      pos_ += 2;
    } else if (c == 'B' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'r') {
      atom.element = Element::Br;
      pos_ += 2;
    } else {
      switch (c) {
        case 'B': atom.element = Element::B; break;
        case 'C': atom.element = Element::C; break;
        case 'N': atom.element = Element::N; break;
        case 'O': atom.element = Element::O; break;
        case 'P': atom.element = Element::P; break;
        case 'S': atom.element = Element::S; break;
        case 'F': atom.element = Element::F; break;
        case 'I': atom.element = Element::I; break;
        case 'b': atom.element = Element::B; atom.aromatic = true; break;
        case 'c': atom.element = Element::C; atom.aromatic = true; break;
        case 'n': atom.element = Element::N; atom.aromatic = true; break;
        case 'o': atom.element = Element::O; atom.aromatic = true; break;
        case 'p': atom.element = Element::P; atom.aromatic = true; break;
        case 's': atom.element = Element::S; atom.aromatic = true; break;
        default:
          fail(ErrorCode::kUnknownElement, start, std::string("unexpected character '") + c + "'");
      }
      ++pos_;
    }
    add_atom(RawAtom{atom, false, start});
  }

  void bracket_atom() {
    const std::size_t open = pos_;
    const std::size_t close = text_.find(']', pos_);
    if (close == std::string_view::npos) fail(ErrorCode::kUnmatchedBracket, open, "unclosed '['");
    std::size_t i = pos_ + 1;
    auto peek = [&]() -> char { return i < close ? text_[i] : '\0'; };
    auto read_int = [&]() -> std::optional<int> {
      if (!std::isdigit(static_cast<unsigned char>(peek()))) return std::nullopt;
      int v = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        v = v * 10 + (text_[i] - '0');
        if (v > 100000) fail(ErrorCode::kUnknownElement, i, "number too large");
        ++i;
      }
      return v;
    };

    Atom atom;
    atom.isotope = read_int();

    const std::size_t sym_start = i;
    std::string sym;
    if (std::isupper(static_cast<unsigned char>(peek()))) {
      sym.push_back(text_[i++]);
      if (std::islower(static_cast<unsigned char>(peek()))) sym.push_back(text_[i++]);
    } else if (std::islower(static_cast<unsigned char>(peek()))) {
      sym.push_back(text_[i++]);
      if (std::islower(static_cast<unsigned char>(peek()))) sym.push_back(text_[i++]);
      atom.aromatic = true;
    } else {
      fail(ErrorCode::kUnknownElement, sym_start, "missing element symbol");
    }
    if (atom.aromatic) {
      static constexpr std::array<std::string_view, 6> kAromatic = {"b", "c", "n", "o", "p", "s"};
      if (std::find(kAromatic.begin(), kAromatic.end(), sym) == kAromatic.end()) {
        fail(ErrorCode::kUnknownElement, sym_start, "unsupported aromatic symbol '" + sym + "'");
      }
      sym[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sym[0])));
    }
    const std::optional<Element> el = lookup_symbol(sym);
    if (!el) fail(ErrorCode::kUnknownElement, sym_start, "unknown element '" + sym + "'");
    atom.element = *el;

    // chirality: @, @@, @TH1, @AL2, @SP3, @TB10, @OH20
    if (peek() == '@') {
      while (peek() == '@') ++i;
      while (std::isupper(static_cast<unsigned char>(peek())) && peek() != 'H') ++i;
      read_int();
    }

    if (peek() == 'H') {
      ++i;
      atom.implicit_h = read_int().value_or(1);
    }

    if (peek() == '+' || peek() == '-') {
      const char sign = peek();
      const int s = sign == '+' ? 1 : -1;
      ++i;
      int magnitude = 1;
      if (const auto n = read_int()) {
        magnitude = *n;
      } else {
        while (peek() == sign) {
          ++magnitude;
          ++i;
        }
      }
      atom.formal_charge = s * magnitude;
      if (magnitude > 2) fail(ErrorCode::kValenceViolation, open, "formal charge outside [-2, +2]");
    }

    if (peek() == ':') {
      ++i;
      if (!read_int()) fail(ErrorCode::kUnknownElement, i, "atom class without digits");
    }
    if (i != close) fail(ErrorCode::kUnknownElement, i, "unexpected character in bracket atom");
    pos_ = close + 1;
    add_atom(RawAtom{atom, true, open});
  }

  void ring_bond() {
    const std::size_t start = pos_;
    int number = 0;
    if (text_[pos_] == '%') {
      if (pos_ + 2 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))) {
        fail(ErrorCode::kUnclosedRing, start, "malformed %nn ring closure");
      }
      number = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      number = text_[pos_] - '0';
      ++pos_;
    }
    if (prev_ < 0) fail(ErrorCode::kUnclosedRing, start, "ring closure without a preceding atom");

    RingOpen& ring = rings_[number];
    if (ring.atom < 0) {
      ring = RingOpen{prev_, pending_, start};
      pending_.reset();
      return;
    }
    if (ring.atom == prev_) fail(ErrorCode::kUnclosedRing, start, "ring closure onto the same atom");
    if (ring.order && pending_ && *ring.order != *pending_) {
      fail(ErrorCode::kUnclosedRing, start, "conflicting ring-closure bond orders");
    }
    std::optional<BondOrder> order = pending_ ? pending_ : ring.order;
    const int other = ring.atom;
    ring = RingOpen{};
    pending_.reset();
    add_bond(other, prev_, order, start);
  }

  void add_atom(RawAtom raw) {
    const int idx = static_cast<int>(atoms_.size());
    atoms_.push_back(raw);
    if (prev_ >= 0) {
      add_bond(prev_, idx, pending_, raw.offset);
      pending_.reset();
    }
    prev_ = idx;
  }

  void add_bond(int a, int b, std::optional<BondOrder> order, std::size_t offset) {
    for (const RawBond& rb : bonds_) {
      if ((rb.a == a && rb.b == b) || (rb.a == b && rb.b == a)) {
        fail(ErrorCode::kUnclosedRing, offset, "duplicate bond between the same atoms");
      }
    }
    bool implicit_aromatic = false;
    BondOrder o = BondOrder::kSingle;
    if (order) {
      o = *order;
    } else if (atoms_[a].atom.aromatic && atoms_[b].atom.aromatic) {
      o = BondOrder::kAromatic;
      implicit_aromatic = true;
    }
    bonds_.push_back(RawBond{a, b, o, implicit_aromatic});
  }

  void finish_syntax() {
    if (!branches_.empty()) {
      fail(ErrorCode::kUnmatchedBracket, branches_.back().second, "unclosed '('");
    }
    if (pending_) fail(ErrorCode::kUnmatchedBracket, pending_offset_, "dangling bond");
    for (const RingOpen& ring : rings_) {
      if (ring.atom >= 0) fail(ErrorCode::kUnclosedRing, ring.offset, "ring bond left open");
    }
    if (atoms_.empty()) fail(ErrorCode::kUnknownElement, 0, "no atoms");
  }

  MolecularGraph build() {
    std::vector<Atom> atoms;
    atoms.reserve(atoms_.size());
    for (const RawAtom& r : atoms_) atoms.push_back(r.atom);
    std::vector<Bond> bonds;
    bonds.reserve(bonds_.size());
    for (const RawBond& rb : bonds_) bonds.push_back(Bond{rb.a, rb.b, rb.order, false});

    // Ring perception, then demote implicit aromatic bonds that are not in a
    // ring (e.g. the biaryl link in c1ccccc1c1ccccc1).
    MolecularGraph first = MolecularGraph::from_parts(atoms, bonds);
    for (std::size_t i = 0; i < bonds.size(); ++i) {
      if (bonds_[i].implicit_aromatic && !first.bonds()[i].in_ring) bonds[i].order = BondOrder::kSingle;
    }

    std::vector<int> bond_sum(atoms.size(), 0);
    std::vector<bool> has_aromatic_bond(atoms.size(), false);
    for (const Bond& b : bonds) {
      bond_sum[b.a] += bond_valence(b.order);
      bond_sum[b.b] += bond_valence(b.order);
      if (b.order == BondOrder::kAromatic) {
        has_aromatic_bond[b.a] = true;
        has_aromatic_bond[b.b] = true;
      }
    }

    for (std::size_t i = 0; i < atoms.size(); ++i) {
      Atom& atom = atoms[i];
      const std::vector<int> allowed = allowed_valences(atom.element, atom.formal_charge);
      if (allowed.empty()) {
        fail(ErrorCode::kValenceViolation, atoms_[i].offset, "no valid valence for charged atom");
      }
      const int sum = bond_sum[i];
      const int lowest = allowed.front();
      const int highest = allowed.back();
      if (atoms_[i].bracket) {
        if (sum + atom.implicit_h > highest) {
          fail(ErrorCode::kValenceViolation, atoms_[i].offset, "bonds and hydrogens exceed valence");
        }
        continue;
      }
      if (atom.aromatic && has_aromatic_bond[i]) {
        // One valence unit is taken by the delocalized pi bond when it fits
        // the lowest valence; pyrrole-type n/o/s keep their lone pair instead.
        if (sum + 1 <= lowest) {
          atom.implicit_h = lowest - sum - 1;
        } else if (sum <= highest) {
          atom.implicit_h = 0;
        } else {
          fail(ErrorCode::kValenceViolation, atoms_[i].offset, "aromatic atom exceeds valence");
        }
        continue;
      }
      const auto it = std::find_if(allowed.begin(), allowed.end(), [&](int v) { return v >= sum; });
      if (it == allowed.end()) fail(ErrorCode::kValenceViolation, atoms_[i].offset, "bond orders exceed valence");
      atom.implicit_h = *it - sum;
    }
    return MolecularGraph::from_parts(std::move(atoms), std::move(bonds));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int prev_ = -1;
  std::optional<BondOrder> pending_;
  std::size_t pending_offset_ = 0;
  std::vector<std::pair<int, std::size_t>> branches_;
  std::array<RingOpen, 100> rings_{};
  std::vector<RawAtom> atoms_;
  std::vector<RawBond> bonds_;
};

}  // namespace

std::string_view element_symbol(Element e) { return info(e).symbol; }

double atomic_mass(Element e) { return info(e).mass; }

MolecularGraph MolecularGraph::from_parts(std::vector<Atom> atoms, std::vector<Bond> bonds) {
  MolecularGraph g;
  g.atoms_ = std::move(atoms);
  g.bonds_ = std::move(bonds);
  const int n = static_cast<int>(g.atoms_.size());
  g.adjacency_.assign(n, {});
  for (int bi = 0; bi < static_cast<int>(g.bonds_.size()); ++bi) {
    const Bond& b = g.bonds_[bi];
    g.adjacency_[b.a].push_back({b.b, bi});
    g.adjacency_[b.b].push_back({b.a, bi});
  }

  // A bond lies on a ring iff it is not a bridge (Tarjan low-link).
  std::vector<int> disc(n, -1), low(n, 0);
  int timer = 0;
  std::function<void(int, int)> dfs = [&](int v, int parent_bond) {
    disc[v] = low[v] = timer++;
    for (const Neighbor& nb : g.adjacency_[v]) {
      if (nb.bond == parent_bond) continue;
      if (disc[nb.atom] >= 0) {
        low[v] = std::min(low[v], disc[nb.atom]);
        g.bonds_[nb.bond].in_ring = true;  // back edge closes a cycle
      } else {
        dfs(nb.atom, nb.bond);
        low[v] = std::min(low[v], low[nb.atom]);
        g.bonds_[nb.bond].in_ring = low[nb.atom] <= disc[v];
      }
    }
  };
  for (Bond& b : g.bonds_) b.in_ring = false;
  for (int v = 0; v < n; ++v) {
    if (disc[v] < 0) dfs(v, -1);
  }
  for (Atom& a : g.atoms_) a.in_ring = false;
  for (const Bond& b : g.bonds_) {
    if (b.in_ring) {
      g.atoms_[b.a].in_ring = true;
      g.atoms_[b.b].in_ring = true;
    }
  }
  return g;
}

MolecularGraph parse_smiles(std::string_view text) { return SmilesParser(text).run(); }

MolecularGraph permute_atoms(const MolecularGraph& graph, std::span<const int> order) {
  const int n = graph.num_atoms();
  if (static_cast<int>(order.size()) != n) {
    throw Error(ErrorCode::kInvalidArgument, "permutation length does not match atom count");
  }
  std::vector<int> new_index(n, -1);
  std::vector<Atom> atoms(n);
  for (int i = 0; i < n; ++i) {
    const int old = order[i];
    if (old < 0 || old >= n || new_index[old] >= 0) {
      throw Error(ErrorCode::kInvalidArgument, "order is not a permutation");
    }
    new_index[old] = i;
    atoms[i] = graph.atoms()[old];
  }
  std::vector<Bond> bonds;
  bonds.reserve(graph.num_bonds());
  for (const Bond& b : graph.bonds()) {
    int a = new_index[b.a];
    int c = new_index[b.b];
    if (a > c) std::swap(a, c);
    bonds.push_back(Bond{a, c, b.order, b.in_ring});
  }
  std::sort(bonds.begin(), bonds.end(),
            [](const Bond& x, const Bond& y) { return std::pair(x.a, x.b) < std::pair(y.a, y.b); });
  return MolecularGraph::from_parts(std::move(atoms), std::move(bonds));
}

int total_hydrogens(const MolecularGraph& graph) {
  int h = 0;
  for (const Atom& a : graph.atoms()) h += a.implicit_h;
  return h;
}

}  // namespace molfuse
