//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <string>
#include <vector>

#include "moco/chem/canonical.hpp"
#include "moco/chem/molgraph.hpp"

namespace moco::chem {

struct Scaffold {
  std::vector<int> atom_indices;  // ascending

  bool empty() const { return atom_indices.empty(); }
};

/// Bemis-Murcko framework: repeatedly deletes non-ring atoms with at most
/// one remaining neighbor until nothing changes. Exocyclic double-bond
/// partners are pruned like any other side chain. Acyclic molecules yield
/// the empty scaffold.
inline Scaffold murcko_scaffold(const MolGraph &g) {
  const std::vector<bool> in_ring = g.ring_atoms();
  std::vector<bool> alive(g.atoms.size(), true);
  std::vector<int> degree(g.atoms.size());
  for (int a = 0; a < g.num_atoms(); ++a)
    degree[a] = g.degree(a);

  std::vector<int> stack;
  for (int a = 0; a < g.num_atoms(); ++a) {
    if (!in_ring[a] && degree[a] <= 1)
      stack.push_back(a);
  }
  while (!stack.empty()) {
    const int a = stack.back();
    stack.pop_back();
    if (!alive[a])
      continue;
    alive[a] = false;
    for (const Neighbor &n: g.neighbors(a)) {
      if (!alive[n.atom])
        continue;
      if (--degree[n.atom] <= 1 && !in_ring[n.atom])
        stack.push_back(n.atom);
    }
  }

  Scaffold s;
  for (int a = 0; a < g.num_atoms(); ++a) {
    if (alive[a])
      s.atom_indices.push_back(a);
  }
  return s;
}

/// Induced subgraph on the given ascending atom subset. Rings are the SSSR
/// rings fully contained in the subset.
inline MolGraph induced_subgraph(const MolGraph &g,
                                 const std::vector<int> &subset) {
  std::vector<int> remap(g.atoms.size(), -1);
  MolGraph sub;
  for (int a: subset) {
    remap[a] = sub.num_atoms();
    Atom atom = g.atoms[a];
    atom.index = sub.num_atoms();
    sub.atoms.push_back(std::move(atom));
  }
  for (const Bond &b: g.bonds) {
    if (remap[b.a] >= 0 && remap[b.b] >= 0)
      sub.bonds.push_back({ remap[b.a], remap[b.b], b.order, b.direction });
  }
  for (const auto &ring: g.rings) {
    std::vector<int> r;
    for (int a: ring)
      r.push_back(remap[a]);
    if (std::find(r.begin(), r.end(), -1) == r.end())
      sub.rings.push_back(std::move(r));
  }
  sub.build_adjacency();
  return sub;
}

/// Grouping key of a molecule's scaffold; empty for acyclic molecules.
inline std::string scaffold_key(const MolGraph &g) {
  const Scaffold s = murcko_scaffold(g);
  if (s.empty())
    return "";
  return canonical_key(induced_subgraph(g, s.atom_indices),
                       CanonicalOptions { .include_hydrogens = false });
}

}  // namespace moco::chem
