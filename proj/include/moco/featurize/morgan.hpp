//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "moco/chem/molgraph.hpp"
#include "moco/util/hash.hpp"

namespace moco::featurize {

constexpr int morgan_bond_code(chem::BondOrder order) {
  switch (order) {
  case chem::BondOrder::kDouble:
    return 2;
  case chem::BondOrder::kTriple:
    return 3;
  case chem::BondOrder::kAromatic:
    return 4;
  default:
    return 1;
  }
}

/// Circular identifiers per round. ids[r][a] is the round-r identifier of
/// atom a; hydrogen atoms carry no identifier and are skipped (their slot
/// holds 0 and heavy[a] is false).
struct MorganIdentifiers {
  std::vector<bool> heavy;
  std::vector<std::vector<std::uint32_t>> ids;
};

inline MorganIdentifiers morgan_identifiers(const chem::MolGraph &g,
                                            int radius) {
  if (radius < 0)
    throw std::invalid_argument("morgan radius must be non-negative");
  const int n = g.num_atoms();
  const std::vector<bool> in_ring = g.ring_atoms();

  MorganIdentifiers out;
  out.heavy.resize(n);
  out.ids.assign(radius + 1, std::vector<std::uint32_t>(n, 0));
  for (int a = 0; a < n; ++a) {
    const chem::Atom &atom = g.atoms[a];
    out.heavy[a] = !atom.is_hydrogen();
    if (!out.heavy[a])
      continue;
    out.ids[0][a] = Fnv1a32()
                        .i32(atom.atomic_number)
                        .i32(g.heavy_degree(a))
                        .i32(g.total_h(a))
                        .i32(atom.formal_charge)
                        .i32(atom.isotope.value_or(0))
                        .i32(in_ring[a] ? 1 : 0)
                        .value();
  }

  std::vector<std::pair<int, std::uint32_t>> env;
  for (int r = 1; r <= radius; ++r) {
    const auto &prev = out.ids[r - 1];
    for (int a = 0; a < n; ++a) {
      if (!out.heavy[a])
        continue;
      env.clear();
      for (const chem::Neighbor &nb: g.neighbors(a)) {
        if (out.heavy[nb.atom])
          env.emplace_back(morgan_bond_code(g.bonds[nb.bond].order),
                           prev[nb.atom]);
      }
      std::sort(env.begin(), env.end());
      Fnv1a32 h;
      h.i32(r).i32(static_cast<std::int32_t>(prev[a]));
      for (const auto &[code, id]: env)
        h.i32(code).i32(static_cast<std::int32_t>(id));
      out.ids[r][a] = h.value();
    }
  }
  return out;
}

/// Folded binary fingerprint: every identifier of every round sets bit
/// id mod nbits.
inline std::vector<std::uint8_t> morgan_fingerprint(const chem::MolGraph &g,
                                                    int radius, int nbits) {
  if (nbits <= 0 || (nbits & (nbits - 1)) != 0)
    throw std::invalid_argument("fingerprint length must be a power of two");
  const MorganIdentifiers mi = morgan_identifiers(g, radius);
  std::vector<std::uint8_t> bits(nbits, 0);
  for (const auto &round: mi.ids) {
    for (int a = 0; a < g.num_atoms(); ++a) {
      if (mi.heavy[a])
        bits[round[a] & static_cast<std::uint32_t>(nbits - 1)] = 1;
    }
  }
  return bits;
}

}  // namespace moco::featurize
