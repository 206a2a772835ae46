//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "moco/encoders/config.hpp"
#include "moco/error.hpp"
#include "moco/nn/layers.hpp"

namespace moco::fusion {

using encoders::kNumViews;
using encoders::View;
using nn::Mat;
using nn::Tensor;

enum class FusionMode { kAttention, kMax, kMean };

inline std::string_view mode_name(FusionMode m) {
  switch (m) {
  case FusionMode::kAttention:
    return "attention";
  case FusionMode::kMax:
    return "max";
  case FusionMode::kMean:
    return "mean";
  }
  return "?";
}

/// Embeddings of one minibatch, one B×D matrix per active view.
struct ViewSet {
  std::vector<View> views;
  std::vector<Tensor> embeddings;

  std::size_t size() const { return views.size(); }
  Eigen::Index batch() const {
    return embeddings.empty() ? 0 : embeddings.front().rows();
  }
};

inline void check_views(const ViewSet &vs) {
  if (vs.embeddings.empty() || vs.batch() == 0)
    throw EmptyBatch("fusion needs at least one view and one molecule");
  if (vs.views.size() != vs.embeddings.size())
    throw ShapeError("fusion: view labels and embeddings differ in count");
  for (const Tensor &t: vs.embeddings) {
    if (t.rows() != vs.batch() || t.cols() != vs.embeddings.front().cols())
      throw ShapeError("fusion: view embeddings differ in shape");
  }
}

/// Weighted sum z_i = Σ_m α_m z_i^m of raw view vectors; alpha is 1×M.
inline Tensor aggregate(const ViewSet &vs, const Tensor &alpha) {
  check_views(vs);
  if (alpha.rows() != 1 ||
      alpha.cols() != static_cast<Eigen::Index>(vs.size()))
    throw ShapeError("aggregate: one weight per view required");
  Tensor out;
  for (std::size_t m = 0; m < vs.size(); ++m) {
    Tensor term = nn::scale_by(vs.embeddings[m],
                               nn::slice_cols(alpha, static_cast<Eigen::Index>(m), 1));
    out = out.defined() ? nn::add(out, term) : term;
  }
  return out;
}

inline Tensor pool_mean(const ViewSet &vs) {
  check_views(vs);
  Tensor out = vs.embeddings.front();
  for (std::size_t m = 1; m < vs.size(); ++m)
    out = nn::add(out, vs.embeddings[m]);
  return nn::scale(out, 1.0 / static_cast<double>(vs.size()));
}

inline Tensor pool_max(const ViewSet &vs) {
  check_views(vs);
  return nn::max_elementwise(vs.embeddings);
}

/// Batch-level attention over views. With ẑ the ℓ2-normalized view
/// vectors, the score of view m is the batch mean of qᵀ tanh(W ẑ + b), and
/// the weights are the softmax of the scores.
class Fusion {
public:
  Fusion(int dim, std::uint64_t seed, FusionMode mode = FusionMode::kAttention)
      : mode_(mode) {
    Rng rng(seed, "fusion");
    q_ = nn::glorot_uniform(1, dim, rng);
    w_ = nn::glorot_uniform(dim, dim, rng);
    b_ = nn::zeros_param(1, dim);
  }

  FusionMode mode() const { return mode_; }
  void set_mode(FusionMode m) { mode_ = m; }

  /// Frozen parameters take no gradient; the weights are still recomputed
  /// from them on every batch.
  void set_frozen(bool frozen) {
    frozen_ = frozen;
    nn::set_trainable(params(), !frozen);
  }
  bool frozen() const { return frozen_; }

  const Tensor &q() const { return q_; }
  const Tensor &w() const { return w_; }
  const Tensor &b() const { return b_; }

  /// 1×M view scores. Each molecule's score is computed from its own row
  /// alone and the batch mean does not depend on order, so permuting the
  /// batch leaves the scores bit-identical.
  Tensor scores(const ViewSet &vs) const {
    check_views(vs);
    std::vector<Tensor> per_view;
    for (const Tensor &z: vs.embeddings) {
      std::vector<Tensor> rows;
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const Tensor zi = nn::l2_normalize_rows(nn::slice_rows(z, i, 1));
        const Tensor u = nn::tanh(nn::add_row(nn::matmul(zi, w_), b_));
        rows.push_back(nn::matmul_nt(u, q_));
      }
      per_view.push_back(nn::mean_unordered(nn::concat_rows(rows)));
    }
    return nn::concat_cols(per_view);
  }

  Tensor alpha(const ViewSet &vs) const {
    return nn::softmax_rows(scores(vs));
  }

  /// Fused embedding of a batch. In attention mode a cached weight vector,
  /// when set, replaces the per-batch weights.
  Tensor forward(const ViewSet &vs) const {
    switch (mode_) {
    case FusionMode::kMax:
      return pool_max(vs);
    case FusionMode::kMean:
      return pool_mean(vs);
    case FusionMode::kAttention:
      break;
    }
    if (cached_alpha_)
      return aggregate(vs, Tensor(cached_alpha_for(vs)));
    return aggregate(vs, alpha(vs));
  }

  /// Stores weights computed over a whole evaluation set, per view.
  void cache_alpha(const ViewSet &vs) {
    nn::NoGradGuard no_grad;
    const Mat a = alpha(vs).value();
    std::array<double, kNumViews> full {};
    for (std::size_t m = 0; m < vs.size(); ++m)
      full[static_cast<int>(vs.views[m])] = a(0, static_cast<Eigen::Index>(m));
    cached_alpha_ = full;
  }

  void clear_cached_alpha() { cached_alpha_.reset(); }
  const std::optional<std::array<double, kNumViews>> &cached_alpha() const {
    return cached_alpha_;
  }

  nn::ParamList params() const {
    return { { "fusion.q", "fusion", q_ },
             { "fusion.w", "fusion", w_ },
             { "fusion.b", "fusion", b_ } };
  }

private:
  Mat cached_alpha_for(const ViewSet &vs) const {
    Mat a(1, static_cast<Eigen::Index>(vs.size()));
    for (std::size_t m = 0; m < vs.size(); ++m)
      a(0, static_cast<Eigen::Index>(m)) =
          (*cached_alpha_)[static_cast<int>(vs.views[m])];
    return a;
  }

  FusionMode mode_;
  bool frozen_ = false;
  Tensor q_, w_, b_;
  std::optional<std::array<double, kNumViews>> cached_alpha_;
};

/// Four-row CSV "view,weight"; inactive views get weight 0.
inline void write_alpha_csv(std::ostream &os,
                            const std::array<double, kNumViews> &alpha) {
  os << "view,weight\n";
  char buf[32];
  for (View v: encoders::kAllViews) {
    std::snprintf(buf, sizeof buf, "%.17g", alpha[static_cast<int>(v)]);
    os << encoders::view_name(v) << ',' << buf << '\n';
  }
}

}  // namespace moco::fusion
