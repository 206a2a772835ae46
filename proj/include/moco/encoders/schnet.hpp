//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "moco/encoders/batch.hpp"
#include "moco/encoders/config.hpp"
#include "moco/error.hpp"
#include "moco/featurize/views.hpp"
#include "moco/nn/fused.hpp"
#include "moco/nn/layers.hpp"

namespace moco::encoders {

/// Gaussian expansion exp(-γ (d - μ_k)²) over evenly spaced centers
/// μ_k on [0, rbf_max].
inline Eigen::RowVectorXd rbf_expand(double d, const SchNetConfig &cfg) {
  Eigen::RowVectorXd out(cfg.rbf);
  const double step = cfg.rbf > 1 ? cfg.rbf_max / (cfg.rbf - 1) : 0.0;
  for (int k = 0; k < cfg.rbf; ++k) {
    const double diff = d - step * k;
    out(k) = std::exp(-cfg.gamma * diff * diff);
  }
  return out;
}

/// Interacting pairs of a batch: every ordered pair within a molecule,
/// the self pair included, optionally limited to a cutoff distance.
struct PairList {
  std::vector<int> i, j;
  Mat rbf;  // one expansion row per pair
};

inline PairList make_pairs(const GraphBatch &b, const SchNetConfig &cfg) {
  PairList p;
  std::vector<double> dist;
  int offset = 0;
  for (int m = 0; m < b.size; ++m) {
    const featurize::MolViews &v = *b.views[m];
    if (!v.positions)
      throw ShapeError("3D encoder needs positions for molecule " +
                       std::to_string(m));
    const featurize::Positions &r = *v.positions;
    if (r.rows() != v.num_atoms)
      throw ShapeError("positions do not match the atom count");
    if (!r.allFinite())
      throw DegenerateGeometry("non-finite coordinates in molecule " +
                               std::to_string(m));
    for (int a = 0; a < v.num_atoms; ++a) {
      for (int c = 0; c < v.num_atoms; ++c) {
        const double d = (r.row(a) - r.row(c)).norm();
        if (cfg.cutoff > 0.0 && a != c && d > cfg.cutoff)
          continue;
        p.i.push_back(offset + a);
        p.j.push_back(offset + c);
        dist.push_back(d);
      }
    }
    offset += v.num_atoms;
  }
  p.rbf.resize(static_cast<Eigen::Index>(dist.size()), cfg.rbf);
  for (std::size_t k = 0; k < dist.size(); ++k)
    p.rbf.row(k) = rbf_expand(dist[k], cfg);
  return p;
}

/// Continuous-filter convolution network over interatomic distances.
/// Layer update: h_i ← g(Σ_j h_j ⊙ W rbf(d_ij)) + h_i, with a learned
/// linear filter per layer and g = Linear → ReLU → Linear. The mean of the
/// final node states is projected to the shared width.
class SchNetEncoder {
public:
  SchNetEncoder(int dim, const SchNetConfig &cfg, std::uint64_t seed)
      : cfg_(cfg) {
    Rng rng(seed, "encoder.3d");
    atom_type_ = nn::Embedding(featurize::kNumAtomTypes, cfg.hidden, rng);
    for (int l = 0; l < cfg.layers; ++l) {
      filter_.emplace_back(cfg.rbf, cfg.hidden, rng);
      update_.emplace_back(cfg.hidden, cfg.hidden, cfg.hidden, rng);
    }
    out_ = nn::Linear(cfg.hidden, dim, rng);
  }

  nn::Tensor forward(const GraphBatch &b, const ForwardMode &mode = {}) const {
    const PairList pairs = make_pairs(b, cfg_);
    const nn::Tensor rbf(pairs.rbf);
    nn::Tensor h = atom_type_(b.atom_type);
    for (int l = 0; l < cfg_.layers; ++l) {
      nn::Tensor w = filter_[l](rbf);
      nn::Tensor m = nn::cfconv(h, w, pairs.i, pairs.j);
      h = nn::add(update_[l](m), h);
    }
    nn::Tensor pooled = nn::segment_mean(h, b.atom_graph, b.size);
    if (mode.train)
      pooled = nn::dropout(pooled, cfg_.dropout, *mode.rng);
    nn::Tensor z = out_(pooled);
    if (!z.value().allFinite())
      throw DegenerateGeometry("3D encoder produced non-finite output");
    return z;
  }

  void collect(nn::ParamList &out) const {
    const std::string g = "encoder.3d";
    atom_type_.collect(out, g + ".atom_type", g);
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string p = g + ".layer" + std::to_string(l);
      filter_[l].collect(out, p + ".filter", g);
      update_[l].collect(out, p + ".update", g);
    }
    out_.collect(out, g + ".out", g);
  }

  const SchNetConfig &config() const { return cfg_; }

private:
  SchNetConfig cfg_;
  nn::Embedding atom_type_;
  std::vector<nn::Linear> filter_;
  std::vector<nn::Mlp2> update_;
  nn::Linear out_;
};

}  // namespace moco::encoders
