//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <string>
#include <vector>

#include "moco/encoders/batch.hpp"
#include "moco/encoders/config.hpp"
#include "moco/featurize/views.hpp"
#include "moco/nn/layers.hpp"

namespace moco::encoders {

/// Graph isomorphism network over atom-type/chirality embeddings with
/// per-layer bond-type and bond-direction embeddings. Each layer computes
/// h_i ← f(h_i + Σ_j (h_j + e_ij)); the embedding is the mean of the
/// last-layer node states.
class GinEncoder {
public:
  GinEncoder(int dim, const GinConfig &cfg, std::uint64_t seed)
      : cfg_(cfg) {
    Rng rng(seed, "encoder.2d");
    atom_type_ = nn::Embedding(featurize::kNumAtomTypes, dim, rng);
    chirality_ = nn::Embedding(featurize::kNumChiralTags, dim, rng);
    for (int l = 0; l < cfg.layers; ++l) {
      bond_type_.emplace_back(featurize::kNumBondTypes, dim, rng);
      bond_dir_.emplace_back(featurize::kNumBondDirections, dim, rng);
      mlp_.emplace_back(dim, 2 * dim, dim, rng);
    }
  }

  nn::Tensor forward(const GraphBatch &b, const ForwardMode &mode = {}) const {
    nn::Tensor h = nn::add(atom_type_(b.atom_type), chirality_(b.atom_chirality));
    for (int l = 0; l < cfg_.layers; ++l) {
      nn::Tensor e = nn::add(bond_type_[l](b.edge_type),
                             bond_dir_[l](b.edge_direction));
      nn::Tensor msg = nn::add(nn::gather_rows(h, b.edge_src), e);
      nn::Tensor agg =
          nn::add(h, nn::scatter_add_rows(msg, b.edge_dst, b.total_atoms));
      h = mlp_[l](agg);
      if (l + 1 < cfg_.layers)
        h = nn::relu(h);
      if (mode.train)
        h = nn::dropout(h, cfg_.dropout, *mode.rng);
    }
    return nn::segment_mean(h, b.atom_graph, b.size);
  }

  void collect(nn::ParamList &out) const {
    const std::string g = "encoder.2d";
    atom_type_.collect(out, g + ".atom_type", g);
    chirality_.collect(out, g + ".chirality", g);
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string p = g + ".layer" + std::to_string(l);
      bond_type_[l].collect(out, p + ".bond_type", g);
      bond_dir_[l].collect(out, p + ".bond_dir", g);
      mlp_[l].collect(out, p + ".mlp", g);
    }
  }

private:
  GinConfig cfg_;
  nn::Embedding atom_type_, chirality_;
  std::vector<nn::Embedding> bond_type_, bond_dir_;
  std::vector<nn::Mlp2> mlp_;
};

}  // namespace moco::encoders
