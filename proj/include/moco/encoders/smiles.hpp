//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "moco/encoders/batch.hpp"
#include "moco/encoders/config.hpp"
#include "moco/error.hpp"
#include "moco/featurize/bpe.hpp"
#include "moco/nn/fused.hpp"
#include "moco/nn/layers.hpp"

namespace moco::encoders {

/// Token sequences padded to a common length.
struct TokenBatch {
  int sequences = 0;
  int length = 0;
  std::vector<int> ids;        // sequences × length, PAD-filled
  std::vector<int> positions;  // position index of each row
  std::vector<std::uint8_t> valid;
};

inline TokenBatch make_token_batch(const std::vector<std::vector<int>> &seqs,
                                   int max_len) {
  if (seqs.empty())
    throw EmptyBatch("empty token batch");
  TokenBatch t;
  t.sequences = static_cast<int>(seqs.size());
  for (const auto &s: seqs) {
    if (s.empty())
      throw ShapeError("token sequence lacks the leading CLS");
    if (static_cast<int>(s.size()) > max_len)
      throw SequenceTooLong("sequence of " + std::to_string(s.size()) +
                            " tokens exceeds the limit of " +
                            std::to_string(max_len));
    t.length = std::max(t.length, static_cast<int>(s.size()));
  }
  for (const auto &s: seqs) {
    for (int p = 0; p < t.length; ++p) {
      const bool in = p < static_cast<int>(s.size());
      t.ids.push_back(in ? s[p] : featurize::BpeVocab::kPad);
      t.positions.push_back(p);
      t.valid.push_back(in ? 1 : 0);
    }
  }
  return t;
}

/// Post-norm transformer layer with a key-padding mask.
struct TransformerLayer {
  nn::Linear wq, wk, wv, wo, ff1, ff2;
  nn::LayerNorm norm1, norm2;
  int heads = 1;

  TransformerLayer() = default;
  TransformerLayer(int dim, int heads_, int ffn, Rng &rng)
      : wq(dim, dim, rng), wk(dim, dim, rng), wv(dim, dim, rng),
        wo(dim, dim, rng), ff1(dim, ffn, rng), ff2(ffn, dim, rng), norm1(dim),
        norm2(dim), heads(heads_) { }

  nn::Tensor operator()(const nn::Tensor &x, const TokenBatch &t) const {
    nn::AttentionLayout lay { t.sequences, t.length, heads, t.valid };
    nn::Tensor a = wo(nn::multihead_attention(wq(x), wk(x), wv(x), lay));
    nn::Tensor h = norm1(nn::add(x, a));
    return norm2(nn::add(h, ff2(nn::relu(ff1(h)))));
  }

  void collect(nn::ParamList &out, const std::string &p,
               const std::string &g) const {
    wq.collect(out, p + ".wq", g);
    wk.collect(out, p + ".wk", g);
    wv.collect(out, p + ".wv", g);
    wo.collect(out, p + ".wo", g);
    ff1.collect(out, p + ".ff1", g);
    ff2.collect(out, p + ".ff2", g);
    norm1.collect(out, p + ".norm1", g);
    norm2.collect(out, p + ".norm2", g);
  }
};

/// Small transformer language model over BPE tokens. Used as a frozen
/// (by default) backbone whose CLS state feeds a trainable MLP.
class SmilesBackbone {
public:
  SmilesBackbone(const SmilesConfig &cfg, std::uint64_t seed): cfg_(cfg) {
    if (cfg.vocab <= featurize::BpeVocab::kNumSpecial)
      throw ShapeError("string encoder needs the tokenizer vocabulary size");
    Rng rng(seed, "encoder.sm.backbone");
    token_ = nn::Embedding(cfg.vocab, cfg.dim, rng);
    position_ = nn::Embedding(cfg.max_len, cfg.dim, rng);
    for (int l = 0; l < cfg.layers; ++l)
      layers_.emplace_back(cfg.dim, cfg.heads, cfg.ffn, rng);
  }

  /// Hidden state of every row of the batch.
  nn::Tensor hidden(const TokenBatch &t) const {
    for (int id: t.ids) {
      if (id < 0 || id >= cfg_.vocab)
        throw ShapeError("token id " + std::to_string(id) +
                         " outside the vocabulary");
    }
    nn::Tensor x = nn::add(token_(t.ids), position_(t.positions));
    for (const TransformerLayer &layer: layers_)
      x = layer(x, t);
    return x;
  }

  nn::Tensor cls(const TokenBatch &t) const {
    std::vector<int> rows;
    for (int s = 0; s < t.sequences; ++s)
      rows.push_back(s * t.length);
    return nn::gather_rows(hidden(t), rows);
  }

  void collect(nn::ParamList &out) const {
    const std::string g = "encoder.sm.backbone";
    token_.collect(out, g + ".token", g);
    position_.collect(out, g + ".position", g);
    for (std::size_t l = 0; l < layers_.size(); ++l)
      layers_[l].collect(out, g + ".layer" + std::to_string(l), g);
  }

  const SmilesConfig &config() const { return cfg_; }

private:
  SmilesConfig cfg_;
  nn::Embedding token_, position_;
  std::vector<TransformerLayer> layers_;
};

class SmilesEncoder {
public:
  SmilesEncoder(int dim, const SmilesConfig &cfg, std::uint64_t seed)
      : backbone_(cfg, seed) {
    Rng rng(seed, "encoder.sm.head");
    head_ = nn::Mlp2(cfg.dim, dim, dim, rng);
    set_frozen(cfg.frozen);
  }

  /// Frozen backbone parameters take no gradient, so none flows into them.
  void set_frozen(bool frozen) {
    frozen_ = frozen;
    nn::ParamList ps;
    backbone_.collect(ps);
    nn::set_trainable(ps, !frozen);
  }

  bool frozen() const { return frozen_; }

  nn::Tensor forward(const GraphBatch &b, const ForwardMode &mode = {}) const {
    std::vector<std::vector<int>> seqs;
    for (const featurize::MolViews *v: b.views)
      seqs.push_back(v->tokens);
    nn::Tensor s = backbone_.cls(make_token_batch(seqs, backbone_.config().max_len));
    if (mode.train)
      s = nn::dropout(s, backbone_.config().dropout, *mode.rng);
    return head_(s);
  }

  const SmilesBackbone &backbone() const { return backbone_; }
  SmilesBackbone &backbone() { return backbone_; }

  /// Trainable parameters only: the head, plus the backbone when unfrozen.
  void collect(nn::ParamList &out) const {
    if (!frozen_)
      backbone_.collect(out);
    head_.collect(out, "encoder.sm.head", "encoder.sm");
  }

  /// Everything, for checkpoints.
  void collect_all(nn::ParamList &out) const {
    backbone_.collect(out);
    head_.collect(out, "encoder.sm.head", "encoder.sm");
  }

private:
  SmilesBackbone backbone_;
  nn::Mlp2 head_;
  bool frozen_ = true;
};

}  // namespace moco::encoders
