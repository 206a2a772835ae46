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
#include "moco/nn/fused.hpp"
#include "moco/nn/layers.hpp"

namespace moco::encoders {

/// Sinusoidal table: P(p, 2i) = sin(p / 10000^(2i/d)),
/// P(p, 2i+1) = cos(p / 10000^(2i/d)).
inline Mat sinusoidal_positions(int length, int dim) {
  Mat p(length, dim);
  for (int pos = 0; pos < length; ++pos) {
    for (int c = 0; c < dim; ++c) {
      const int i2 = c - (c % 2);
      const double angle =
          pos / std::pow(10000.0, static_cast<double>(i2) / dim);
      p(pos, c) = c % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }
  return p;
}

inline void check_fingerprints(const GraphBatch &b, int bits) {
  for (int m = 0; m < b.size; ++m) {
    if (static_cast<int>(b.views[m]->fingerprint.size()) != bits)
      throw ShapeError("fingerprint of molecule " + std::to_string(m) +
                       " has " +
                       std::to_string(b.views[m]->fingerprint.size()) +
                       " bits, expected " + std::to_string(bits));
  }
}

/// Self-attention over fingerprint bit positions. Each position is the
/// embedding of its bit value plus a fixed sinusoidal code; one multi-head
/// attention layer (no biases) is followed by a sum over positions and a
/// linear map to the shared width.
class FingerprintEncoder {
public:
  FingerprintEncoder(int dim, const FpConfig &cfg, std::uint64_t seed)
      : cfg_(cfg), positions_(sinusoidal_positions(cfg.bits, cfg.dim)) {
    if (cfg.dim % cfg.heads != 0)
      throw ShapeError("fingerprint width must divide into heads");
    Rng rng(seed, "encoder.fp");
    value_ = nn::Embedding(2, cfg.dim, rng);
    wq_ = nn::Linear(cfg.dim, cfg.dim, rng, false);
    wk_ = nn::Linear(cfg.dim, cfg.dim, rng, false);
    wv_ = nn::Linear(cfg.dim, cfg.dim, rng, false);
    out_ = nn::Linear(cfg.dim, dim, rng);
  }

  /// Position-wise input rows of a batch (B·F × D_F).
  nn::Tensor input(const GraphBatch &b) const {
    check_fingerprints(b, cfg_.bits);
    std::vector<int> bits;
    bits.reserve(static_cast<std::size_t>(b.size) * cfg_.bits);
    for (int m = 0; m < b.size; ++m) {
      for (std::uint8_t v: b.views[m]->fingerprint)
        bits.push_back(v ? 1 : 0);
    }
    const nn::Tensor pos(positions_.replicate(b.size, 1));
    return nn::add(value_(bits), pos);
  }

  nn::AttentionLayout layout(const GraphBatch &b) const {
    return { b.size, cfg_.bits, cfg_.heads, {} };
  }

  nn::Tensor forward(const GraphBatch &b, const ForwardMode &mode = {}) const {
    const nn::Tensor x = input(b);
    nn::Tensor att =
        nn::multihead_attention(wq_(x), wk_(x), wv_(x), layout(b));
    std::vector<int> seg(static_cast<std::size_t>(b.size) * cfg_.bits);
    for (std::size_t k = 0; k < seg.size(); ++k)
      seg[k] = static_cast<int>(k / cfg_.bits);
    nn::Tensor pooled = nn::scatter_add_rows(att, seg, b.size);
    if (mode.train)
      pooled = nn::dropout(pooled, cfg_.dropout, *mode.rng);
    return out_(pooled);
  }

  /// Attention probabilities of one molecule and head, for inspection.
  Mat attention(const GraphBatch &b, int molecule, int head) const {
    nn::NoGradGuard no_grad;
    const nn::Tensor x = input(b);
    return nn::attention_probabilities(wq_(x), wk_(x), layout(b), molecule,
                                       head);
  }

  void collect(nn::ParamList &out) const {
    const std::string g = "encoder.fp";
    value_.collect(out, g + ".value", g);
    wq_.collect(out, g + ".wq", g);
    wk_.collect(out, g + ".wk", g);
    wv_.collect(out, g + ".wv", g);
    out_.collect(out, g + ".out", g);
  }

private:
  FpConfig cfg_;
  Mat positions_;
  nn::Embedding value_;
  nn::Linear wq_, wk_, wv_, out_;
};

/// Ablation encoder: two-layer MLP over the raw bit vector.
class FingerprintMlpEncoder {
public:
  FingerprintMlpEncoder(int dim, const FpConfig &cfg, std::uint64_t seed)
      : cfg_(cfg) {
    Rng rng(seed, "encoder.fp");
    mlp_ = nn::Mlp2(cfg.bits, dim, dim, rng);
  }

  static Mat bit_matrix(const GraphBatch &b, int bits) {
    check_fingerprints(b, bits);
    Mat x(b.size, bits);
    for (int m = 0; m < b.size; ++m) {
      for (int k = 0; k < bits; ++k)
        x(m, k) = b.views[m]->fingerprint[k] ? 1.0 : 0.0;
    }
    return x;
  }

  nn::Tensor forward(const GraphBatch &b, const ForwardMode &mode = {}) const {
    nn::Tensor hidden = nn::relu(mlp_.first(nn::Tensor(bit_matrix(b, cfg_.bits))));
    if (mode.train)
      hidden = nn::dropout(hidden, cfg_.dropout, *mode.rng);
    return mlp_.second(hidden);
  }

  const nn::Mlp2 &mlp() const { return mlp_; }

  void collect(nn::ParamList &out) const {
    mlp_.collect(out, "encoder.fp.mlp", "encoder.fp");
  }

private:
  FpConfig cfg_;
  nn::Mlp2 mlp_;
};

}  // namespace moco::encoders
