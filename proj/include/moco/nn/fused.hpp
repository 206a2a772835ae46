//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "moco/error.hpp"
#include "moco/nn/ops.hpp"
#include "moco/nn/tensor.hpp"
#include "moco/util/rng.hpp"

namespace moco::nn {

/// Shape of a batch of equal-length sequences stacked row-wise.
struct AttentionLayout {
  int sequences = 1;
  int length = 0;
  int heads = 1;
  // Optional, one flag per row: keys with flag 0 receive no attention.
  std::vector<std::uint8_t> key_valid;
};

namespace detail {

inline void check_attention(const Tensor &q, const Tensor &k, const Tensor &v,
                            const AttentionLayout &lay) {
  const Eigen::Index rows =
      static_cast<Eigen::Index>(lay.sequences) * lay.length;
  if (q.rows() != rows || k.rows() != rows || v.rows() != rows)
    throw ShapeError("attention: rows must equal sequences x length");
  if (q.cols() != k.cols() || q.cols() % lay.heads != 0 ||
      v.cols() % lay.heads != 0)
    throw ShapeError("attention: widths must split evenly across heads");
  if (!lay.key_valid.empty() &&
      static_cast<Eigen::Index>(lay.key_valid.size()) != rows)
    throw ShapeError("attention: key mask needs one flag per row");
}

// Attention probabilities of one (sequence, head) block.
inline Mat attention_block(const Mat &q, const Mat &k,
                           const AttentionLayout &lay, int s, int h) {
  const int L = lay.length;
  const int dh = static_cast<int>(q.cols()) / lay.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto qb = q.block(static_cast<Eigen::Index>(s) * L, h * dh, L, dh);
  const auto kb = k.block(static_cast<Eigen::Index>(s) * L, h * dh, L, dh);
  Mat scores = (qb * kb.transpose()) * scale;
  std::vector<int> masked;
  if (!lay.key_valid.empty()) {
    for (int j = 0; j < L; ++j) {
      if (!lay.key_valid[static_cast<std::size_t>(s) * L + j])
        masked.push_back(j);
    }
  }
  // Masked columns are zeroed explicitly after exp: the vectorized exp
  // clamps very negative inputs to a denormal instead of returning 0.
  for (int j: masked)
    scores.col(j).setConstant(-std::numeric_limits<double>::infinity());
  for (int i = 0; i < L; ++i) {
    const double m = scores.row(i).maxCoeff();
    scores.row(i) = (scores.row(i).array() - m).exp();
    for (int j: masked)
      scores(i, j) = 0.0;
    scores.row(i) /= scores.row(i).sum();
  }
  return scores;
}

}  // namespace detail

/// Probability matrix of one block, for inspection.
inline Mat attention_probabilities(const Tensor &q, const Tensor &k,
                                   const AttentionLayout &lay, int sequence,
                                   int head) {
  return detail::attention_block(q.value(), k.value(), lay, sequence, head);
}

/// Scaled dot-product attention per sequence and head; head outputs are
/// concatenated along columns. Probabilities are recomputed during the
/// backward pass instead of being stored.
inline Tensor multihead_attention(const Tensor &q, const Tensor &k,
                                  const Tensor &v, AttentionLayout lay) {
  detail::check_attention(q, k, v, lay);
  const int L = lay.length, H = lay.heads;
  const int dv = static_cast<int>(v.cols()) / H;
  Mat out(v.rows(), v.cols());
  for (int s = 0; s < lay.sequences; ++s) {
    for (int h = 0; h < H; ++h) {
      const Mat a = detail::attention_block(q.value(), k.value(), lay, s, h);
      out.block(static_cast<Eigen::Index>(s) * L, h * dv, L, dv).noalias() =
          a * v.value().block(static_cast<Eigen::Index>(s) * L, h * dv, L, dv);
    }
  }
  return make_result(std::move(out), { q, k, v }, [lay](Node &n) {
    auto &Q = detail::parent(n, 0), &K = detail::parent(n, 1),
         &V = detail::parent(n, 2);
    const int L = lay.length, H = lay.heads;
    const int dh = static_cast<int>(Q.value.cols()) / H;
    const int dv = static_cast<int>(V.value.cols()) / H;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Mat dq = Mat::Zero(Q.value.rows(), Q.value.cols());
    Mat dk = Mat::Zero(K.value.rows(), K.value.cols());
    Mat dvm = Mat::Zero(V.value.rows(), V.value.cols());
    for (int s = 0; s < lay.sequences; ++s) {
      const Eigen::Index r0 = static_cast<Eigen::Index>(s) * L;
      for (int h = 0; h < H; ++h) {
        const Mat a = detail::attention_block(Q.value, K.value, lay, s, h);
        const auto g = n.grad.block(r0, h * dv, L, dv);
        dvm.block(r0, h * dv, L, dv).noalias() = a.transpose() * g;
        Mat da = g * V.value.block(r0, h * dv, L, dv).transpose();
        Eigen::VectorXd dots = a.cwiseProduct(da).rowwise().sum();
        Mat ds = a.cwiseProduct(da) - dots.asDiagonal() * a;
        ds *= scale;
        dq.block(r0, h * dh, L, dh).noalias() =
            ds * K.value.block(r0, h * dh, L, dh);
        dk.block(r0, h * dh, L, dh).noalias() =
            ds.transpose() * Q.value.block(r0, h * dh, L, dh);
      }
    }
    if (Q.requires_grad)
      Q.accumulate(dq);
    if (K.requires_grad)
      K.accumulate(dk);
    if (V.requires_grad)
      V.accumulate(dvm);
  });
}

/// Continuous-filter convolution over an explicit pair list:
/// out[i_p] += h[j_p] ⊙ filter[p].
inline Tensor cfconv(const Tensor &h, const Tensor &filter,
                     std::vector<int> pair_i, std::vector<int> pair_j) {
  if (filter.rows() != static_cast<Eigen::Index>(pair_i.size()) ||
      pair_i.size() != pair_j.size() || filter.cols() != h.cols())
    throw ShapeError("cfconv: filter must have one row per pair");
  Mat out = Mat::Zero(h.rows(), h.cols());
  for (std::size_t p = 0; p < pair_i.size(); ++p)
    out.row(pair_i[p]) += h.value().row(pair_j[p]).cwiseProduct(
        filter.value().row(p));
  return make_result(std::move(out), { h, filter },
                     [pair_i, pair_j](Node &n) {
    auto &Hn = detail::parent(n, 0), &F = detail::parent(n, 1);
    if (Hn.requires_grad) {
      Mat &dh = Hn.grad_buffer();
      for (std::size_t p = 0; p < pair_i.size(); ++p)
        dh.row(pair_j[p]) +=
            n.grad.row(pair_i[p]).cwiseProduct(F.value.row(p));
    }
    if (F.requires_grad) {
      Mat df(F.value.rows(), F.value.cols());
      for (std::size_t p = 0; p < pair_i.size(); ++p)
        df.row(p) = n.grad.row(pair_i[p]).cwiseProduct(Hn.value.row(pair_j[p]));
      F.accumulate(df);
    }
  });
}

/// Inverted dropout; identity when p is 0.
inline Tensor dropout(const Tensor &x, double p, Rng &rng) {
  if (p <= 0.0)
    return x;
  if (p >= 1.0)
    throw std::invalid_argument("dropout probability must be below 1");
  Mat mask(x.rows(), x.cols());
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < mask.size(); ++i)
    mask.data()[i] = rng.uniform() < p ? 0.0 : keep;
  Mat out = x.value().cwiseProduct(mask);
  return make_result(std::move(out), { x }, [mask](Node &n) {
    detail::parent(n, 0).accumulate(n.grad.cwiseProduct(mask));
  });
}

}  // namespace moco::nn
