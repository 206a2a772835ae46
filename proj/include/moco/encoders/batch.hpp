//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "moco/error.hpp"
#include "moco/featurize/views.hpp"
#include "moco/nn/tensor.hpp"

namespace moco::encoders {

using nn::Mat;

/// Molecules of a minibatch flattened into one disjoint graph.
struct GraphBatch {
  int size = 0;  // molecules
  int total_atoms = 0;
  std::vector<int> atom_graph;  // molecule of each atom
  std::vector<int> atom_type;
  std::vector<int> atom_chirality;
  // Directed edges; each bond appears in both directions.
  std::vector<int> edge_src, edge_dst, edge_type, edge_direction;
  std::vector<const featurize::MolViews *> views;
};

inline GraphBatch make_graph_batch(
    const std::vector<const featurize::MolViews *> &views) {
  if (views.empty())
    throw EmptyBatch("empty minibatch");
  GraphBatch b;
  b.size = static_cast<int>(views.size());
  b.views = views;
  int offset = 0;
  for (int m = 0; m < b.size; ++m) {
    const featurize::MolViews &v = *views[m];
    if (static_cast<int>(v.atom_feats.size()) != v.num_atoms ||
        v.adjacency.rows() != v.num_atoms)
      throw ShapeError("molecule " + std::to_string(m) +
                       ": atom features do not match the atom count");
    if (v.num_atoms == 0)
      throw ShapeError("molecule " + std::to_string(m) + " has no atoms");
    for (const featurize::AtomFeature &a: v.atom_feats) {
      b.atom_graph.push_back(m);
      b.atom_type.push_back(a.type);
      b.atom_chirality.push_back(a.chirality);
    }
    for (const featurize::BondFeature &e: v.bond_feats) {
      if (e.a < 0 || e.b < 0 || e.a >= v.num_atoms || e.b >= v.num_atoms)
        throw ShapeError("bond endpoint outside the molecule");
      for (int dir = 0; dir < 2; ++dir) {
        b.edge_src.push_back(offset + (dir ? e.b : e.a));
        b.edge_dst.push_back(offset + (dir ? e.a : e.b));
        b.edge_type.push_back(e.type);
        b.edge_direction.push_back(e.direction);
      }
    }
    offset += v.num_atoms;
  }
  b.total_atoms = offset;
  return b;
}

}  // namespace moco::encoders
