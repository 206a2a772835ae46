//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "moco/chem/molgraph.hpp"
#include "moco/error.hpp"
#include "moco/featurize/bpe.hpp"
#include "moco/featurize/conformer.hpp"
#include "moco/featurize/morgan.hpp"

namespace moco::featurize {

inline constexpr std::array<std::string_view, 11> kAtomTypes {
  "H", "B", "C", "N", "O", "F", "P", "S", "Cl", "Br", "I",
};

// Index kAtomTypes.size() is the catch-all slot for other elements.
inline constexpr int kNumAtomTypes = static_cast<int>(kAtomTypes.size()) + 1;
inline constexpr int kNumChiralTags = 4;  // none, CW, CCW, other
inline constexpr int kNumBondTypes = 4;
inline constexpr int kNumBondDirections = 3;

inline int atom_type_index(std::string_view element) {
  for (std::size_t k = 0; k < kAtomTypes.size(); ++k) {
    if (kAtomTypes[k] == element)
      return static_cast<int>(k);
  }
  return kNumAtomTypes - 1;
}

inline int chiral_tag_index(chem::Parity p) {
  switch (p) {
  case chem::Parity::kNone:
    return 0;
  case chem::Parity::kCW:
    return 1;
  case chem::Parity::kCCW:
    return 2;
  }
  return 3;
}

struct BondFeature {
  int a = 0;
  int b = 0;
  int type = 0;       // single, double, triple, aromatic
  int direction = 0;  // none, up, down

  bool operator==(const BondFeature &) const = default;
};

struct AtomFeature {
  int type = 0;
  int chirality = 0;

  bool operator==(const AtomFeature &) const = default;
};

struct MolViews {
  int num_atoms = 0;
  Eigen::MatrixXi adjacency;
  std::vector<AtomFeature> atom_feats;
  std::vector<BondFeature> bond_feats;
  std::optional<Positions> positions;
  std::vector<std::uint8_t> fingerprint;
  std::vector<int> tokens;

  bool has_positions() const { return positions.has_value(); }
};

/// Bitwise equality, including the exact bit patterns of coordinates.
inline bool identical(const MolViews &x, const MolViews &y) {
  if (x.num_atoms != y.num_atoms || x.adjacency != y.adjacency ||
      x.atom_feats != y.atom_feats || x.bond_feats != y.bond_feats ||
      x.fingerprint != y.fingerprint || x.tokens != y.tokens ||
      x.has_positions() != y.has_positions())
    return false;
  if (!x.has_positions())
    return true;
  return x.positions->rows() == y.positions->rows() &&
         std::memcmp(x.positions->data(), y.positions->data(),
                     sizeof(double) * x.positions->size()) == 0;
}

struct FeaturizerConfig {
  int fp_bits = 1024;
  int fp_radius = 2;
};

/// Adjacency and atom/bond index features of a graph.
inline void fill_graph_views(const chem::MolGraph &g, MolViews &v) {
  const int n = g.num_atoms();
  v.num_atoms = n;
  v.adjacency = Eigen::MatrixXi::Zero(n, n);
  v.atom_feats.clear();
  v.bond_feats.clear();
  for (const chem::Atom &a: g.atoms)
    v.atom_feats.push_back({ atom_type_index(a.element),
                             chiral_tag_index(a.parity) });
  for (const chem::Bond &b: g.bonds) {
    v.adjacency(b.a, b.b) = v.adjacency(b.b, b.a) = 1;
    v.bond_feats.push_back({ b.a, b.b, static_cast<int>(b.order),
                             static_cast<int>(b.direction) });
  }
}

inline MolViews build_views(const chem::MolGraph &g,
                            const std::optional<Positions> &coords,
                            const BpeVocab &vocab,
                            const FeaturizerConfig &cfg = {}) {
  if (coords && coords->rows() != g.num_atoms())
    throw AlignmentError("coordinates have " + std::to_string(coords->rows()) +
                         " rows for " + std::to_string(g.num_atoms()) +
                         " atoms");
  MolViews v;
  fill_graph_views(g, v);
  v.positions = coords;
  v.fingerprint = morgan_fingerprint(g, cfg.fp_radius, cfg.fp_bits);
  v.tokens = bpe_encode(g.source_smiles, vocab);
  return v;
}

}  // namespace moco::featurize
