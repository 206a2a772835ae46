//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "moco/chem/molgraph.hpp"

namespace moco::chem {

namespace detail {

template <class T>
std::vector<int> dense_ranks(const std::vector<T> &keys) {
  std::vector<int> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return keys[x] < keys[y]; });
  std::vector<int> rank(keys.size(), 0);
  int r = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && keys[order[k - 1]] < keys[order[k]])
      ++r;
    rank[order[k]] = r;
  }
  return rank;
}

inline int count_classes(const std::vector<int> &ranks) {
  return ranks.empty() ? 0 : *std::max_element(ranks.begin(), ranks.end()) + 1;
}

}  // namespace detail

struct CanonicalOptions {
  // Scaffold grouping drops hydrogens, which depend on the pruned
  // substituents rather than the framework.
  bool include_hydrogens = true;
};

/// Iterative neighborhood refinement: starts from per-atom invariants and
/// re-ranks each atom by (own rank, sorted (bond order, neighbor rank))
/// until the number of classes stops growing. Ranks are dense and depend
/// only on the graph, not on the atom numbering.
inline std::vector<int> refine_atom_classes(const MolGraph &g,
                                            const CanonicalOptions &opts = {}) {
  using Invariant = std::tuple<int, int, int, int, int, int>;
  std::vector<Invariant> init;
  init.reserve(g.atoms.size());
  for (const Atom &a: g.atoms) {
    init.emplace_back(a.atomic_number, a.formal_charge,
                      opts.include_hydrogens ? g.total_h(a.index) : 0,
                      a.aromatic ? 1 : 0, a.isotope.value_or(0),
                      g.degree(a.index));
  }
  std::vector<int> ranks = detail::dense_ranks(init);
  int classes = detail::count_classes(ranks);

  using Refined = std::pair<int, std::vector<std::pair<int, int>>>;
  for (int iter = 0; iter < g.num_atoms(); ++iter) {
    std::vector<Refined> keys(g.atoms.size());
    for (int a = 0; a < g.num_atoms(); ++a) {
      keys[a].first = ranks[a];
      for (const Neighbor &n: g.neighbors(a)) {
        keys[a].second.emplace_back(static_cast<int>(g.bonds[n.bond].order),
                                    ranks[n.atom]);
      }
      std::sort(keys[a].second.begin(), keys[a].second.end());
    }
    std::vector<int> next = detail::dense_ranks(keys);
    const int next_classes = detail::count_classes(next);
    ranks = std::move(next);
    if (next_classes == classes)
      break;
    classes = next_classes;
  }
  return ranks;
}

/// Deterministic molecule key, equal for graphs that differ only in atom
/// numbering. Built from refined atom classes: the sorted list of atom
/// descriptors followed by the sorted list of class-labelled bonds.
/// Stereo parity and bond directions are not part of the key.
inline std::string canonical_key(const MolGraph &g,
                                 const CanonicalOptions &opts = {}) {
  if (g.atoms.empty())
    return "";
  const std::vector<int> cls = refine_atom_classes(g, opts);

  std::vector<std::tuple<int, int, int, int, int, int>> atoms;
  for (const Atom &a: g.atoms) {
    atoms.emplace_back(cls[a.index], a.atomic_number, a.formal_charge,
                       opts.include_hydrogens ? g.total_h(a.index) : 0,
                       a.aromatic ? 1 : 0, a.isotope.value_or(0));
  }
  std::sort(atoms.begin(), atoms.end());

  std::vector<std::tuple<int, int, int>> bonds;
  for (const Bond &b: g.bonds) {
    const int x = cls[b.a], y = cls[b.b];
    bonds.emplace_back(std::min(x, y), std::max(x, y),
                       static_cast<int>(b.order));
  }
  std::sort(bonds.begin(), bonds.end());

  std::ostringstream os;
  os << g.num_atoms() << ';';
  for (const auto &[c, z, q, h, ar, iso]: atoms)
    os << c << ':' << z << ',' << q << ',' << h << ',' << ar << ',' << iso
       << ' ';
  os << ';';
  for (const auto &[x, y, o]: bonds)
    os << x << '-' << y << ':' << o << ' ';
  return os.str();
}

}  // namespace moco::chem
