//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "moco/chem/element.hpp"

namespace moco::chem {

enum class Parity : std::uint8_t { kNone, kCW, kCCW };

enum class BondOrder : std::uint8_t { kSingle, kDouble, kTriple, kAromatic };

enum class BondDirection : std::uint8_t { kNone, kUp, kDown };

struct Atom {
  std::string element;
  int atomic_number = 0;
  int formal_charge = 0;
  int implicit_h = 0;
  bool aromatic = false;
  Parity parity = Parity::kNone;
  std::optional<int> isotope;
  int index = 0;

  bool is_hydrogen() const { return atomic_number == 1; }
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::kSingle;
  BondDirection direction = BondDirection::kNone;

  int other(int atom) const { return atom == a ? b : a; }
};

constexpr int bond_valence(BondOrder order) {
  switch (order) {
  case BondOrder::kDouble:
    return 2;
  case BondOrder::kTriple:
    return 3;
  default:
    return 1;
  }
}

constexpr std::string_view to_string(BondOrder order) {
  switch (order) {
  case BondOrder::kSingle:
    return "SINGLE";
  case BondOrder::kDouble:
    return "DOUBLE";
  case BondOrder::kTriple:
    return "TRIPLE";
  case BondOrder::kAromatic:
    return "AROMATIC";
  }
  return "?";
}

constexpr std::string_view to_string(Parity p) {
  switch (p) {
  case Parity::kCW:
    return "CW";
  case Parity::kCCW:
    return "CCW";
  default:
    return "NONE";
  }
}

/// Neighbor entry of the adjacency list: the adjacent atom and the bond
/// index joining them.
struct Neighbor {
  int atom;
  int bond;
};

class MolGraph {
public:
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  // SSSR, each cycle as atoms in traversal order starting at its
  // smallest index.
  std::vector<std::vector<int>> rings;
  std::string source_smiles;

  int num_atoms() const { return static_cast<int>(atoms.size()); }
  int num_bonds() const { return static_cast<int>(bonds.size()); }

  /// Rebuilds the adjacency list; must be called after bonds change.
  void build_adjacency() {
    adjacency_.assign(atoms.size(), {});
    for (int i = 0; i < num_bonds(); ++i) {
      adjacency_[bonds[i].a].push_back({ bonds[i].b, i });
      adjacency_[bonds[i].b].push_back({ bonds[i].a, i });
    }
  }

  const std::vector<Neighbor> &neighbors(int atom) const {
    return adjacency_[atom];
  }

  int degree(int atom) const {
    return static_cast<int>(adjacency_[atom].size());
  }

  int find_bond(int u, int v) const {
    for (const Neighbor &n: adjacency_[u]) {
      if (n.atom == v)
        return n.bond;
    }
    return -1;
  }

  /// Component id per atom (ids are dense, ordered by smallest member).
  std::vector<int> components() const {
    std::vector<int> comp(atoms.size(), -1);
    int next = 0;
    std::vector<int> stack;
    for (int s = 0; s < num_atoms(); ++s) {
      if (comp[s] >= 0)
        continue;
      comp[s] = next;
      stack.push_back(s);
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (const Neighbor &n: adjacency_[u]) {
          if (comp[n.atom] < 0) {
            comp[n.atom] = next;
            stack.push_back(n.atom);
          }
        }
      }
      ++next;
    }
    return comp;
  }

  int num_components() const {
    std::vector<int> c = components();
    return c.empty() ? 0 : *std::max_element(c.begin(), c.end()) + 1;
  }

  /// Per-atom flag: member of at least one SSSR ring.
  std::vector<bool> ring_atoms() const {
    std::vector<bool> in_ring(atoms.size(), false);
    for (const auto &ring: rings) {
      for (int a: ring)
        in_ring[a] = true;
    }
    return in_ring;
  }

  std::vector<bool> ring_bonds() const {
    std::vector<bool> in_ring(bonds.size(), false);
    for (const auto &ring: rings) {
      for (std::size_t k = 0; k < ring.size(); ++k) {
        int bond = find_bond(ring[k], ring[(k + 1) % ring.size()]);
        if (bond >= 0)
          in_ring[bond] = true;
      }
    }
    return in_ring;
  }

  /// Hydrogens on an atom: implicit count plus explicit hydrogen neighbors.
  int total_h(int atom) const {
    int h = atoms[atom].implicit_h;
    for (const Neighbor &n: adjacency_[atom])
      h += atoms[n.atom].is_hydrogen() ? 1 : 0;
    return h;
  }

  int heavy_degree(int atom) const {
    int d = 0;
    for (const Neighbor &n: adjacency_[atom])
      d += atoms[n.atom].is_hydrogen() ? 0 : 1;
    return d;
  }

private:
  std::vector<std::vector<Neighbor>> adjacency_;
};

/// Line-oriented debug dump: a header, one line per atom, then one line
/// per bond and per ring.
inline void write_debug_dump(std::ostream &os, const MolGraph &g) {
  os << "MOL " << g.source_smiles << '\n'
     << "COUNTS " << g.num_atoms() << ' ' << g.num_bonds() << ' '
     << g.rings.size() << '\n';
  for (const Atom &a: g.atoms) {
    os << "A " << a.index << ' ' << a.element << ' ' << a.formal_charge << ' '
       << g.total_h(a.index) << ' ' << (a.aromatic ? 1 : 0) << ' '
       << to_string(a.parity) << ' ' << a.isotope.value_or(0) << '\n';
  }
  for (const Bond &b: g.bonds)
    os << "B " << b.a << ' ' << b.b << ' ' << to_string(b.order) << '\n';
  for (const auto &ring: g.rings) {
    os << 'R';
    for (int a: ring)
      os << ' ' << a;
    os << '\n';
  }
  os << "END\n";
}

}  // namespace moco::chem
