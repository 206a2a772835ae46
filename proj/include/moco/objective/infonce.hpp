//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <string>
#include <vector>

#include "moco/error.hpp"
#include "moco/fusion/fusion.hpp"
#include "moco/nn/layers.hpp"

namespace moco::objective {

using nn::Mat;
using nn::Tensor;

/// Cosine similarity of vectors projected by a two-layer MLP g, shared
/// by every anchor view and by the fused embedding.
class Critic {
public:
  Critic(int dim, int hidden, std::uint64_t seed) {
    Rng rng(seed, "critic");
    g_ = nn::Mlp2(dim, hidden, dim, rng);
  }

  /// Leaves vectors unprojected.
  static Critic identity() {
    Critic c;
    c.identity_ = true;
    return c;
  }

  Tensor project(const Tensor &x) const { return identity_ ? x : g_(x); }

  /// Pairwise similarities between rows of a (N×D) and b (K×D).
  /// A zero projection raises ZeroProjection.
  Tensor similarity(const Tensor &a, const Tensor &b) const {
    return nn::matmul_nt(nn::l2_normalize_rows(project(a)),
                         nn::l2_normalize_rows(project(b)));
  }

  double operator()(const Mat &x, const Mat &y) const {
    nn::NoGradGuard no_grad;
    return similarity(Tensor(x), Tensor(y)).item();
  }

  nn::ParamList params() const {
    nn::ParamList out;
    if (!identity_)
      g_.collect(out, "critic.g", "critic");
    return out;
  }

private:
  Critic() = default;

  nn::Mlp2 g_;
  bool identity_ = false;
};

/// Multiview InfoNCE: every view embedding z_i^m is an anchor whose
/// positive is the fused z_i, against the fused embeddings of the whole
/// batch (j = i included). Averaged over anchors.
inline Tensor infonce_from_similarity(const Tensor &sim, Eigen::Index batch,
                                      double tau) {
  if (!(tau > 0.0))
    throw std::invalid_argument("temperature must be positive");
  if (batch <= 0 || sim.rows() % batch != 0 || sim.cols() != batch)
    throw ShapeError("infonce: similarity must be (M*B) x B");
  const Tensor logp = nn::log_softmax_rows(nn::scale(sim, 1.0 / tau));
  std::vector<int> rows, cols;
  for (Eigen::Index r = 0; r < sim.rows(); ++r) {
    rows.push_back(static_cast<int>(r));
    cols.push_back(static_cast<int>(r % batch));
  }
  return nn::scale(nn::sum(nn::select_entries(logp, rows, cols)),
                   -1.0 / static_cast<double>(sim.rows()));
}

inline Tensor infonce_loss(const fusion::ViewSet &views, const Tensor &fused,
                           const Critic &critic, double tau) {
  fusion::check_views(views);
  if (fused.rows() != views.batch())
    throw ShapeError("infonce: fused batch differs from the view batch");
  const Tensor anchors = nn::concat_rows(views.embeddings);
  return infonce_from_similarity(critic.similarity(anchors, fused),
                                 views.batch(), tau);
}

}  // namespace moco::objective
