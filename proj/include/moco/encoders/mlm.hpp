//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "moco/encoders/smiles.hpp"
#include "moco/error.hpp"
#include "moco/nn/adam.hpp"

namespace moco::encoders {

struct MlmConfig {
  int epochs = 4;
  int batch_size = 32;
  double lr = 1e-3;
  double mask_rate = 0.15;
  std::uint64_t seed = 0;
};

struct MlmResult {
  std::vector<double> epoch_loss;
  bool diverged = false;
};

/// Masked copy of a CLS-prefixed sequence. Each non-CLS token is chosen
/// with probability `rate` and replaced by MASK; a sequence with at least
/// one token always gets one mask.
struct MaskedSequence {
  std::vector<int> input;
  std::vector<int> masked_positions;
  std::vector<int> targets;
};

inline MaskedSequence mask_tokens(const std::vector<int> &seq, double rate,
                                  Rng &rng) {
  MaskedSequence m { seq, {}, {} };
  for (std::size_t p = 1; p < seq.size(); ++p) {
    if (rng.uniform() < rate)
      m.masked_positions.push_back(static_cast<int>(p));
  }
  if (m.masked_positions.empty() && seq.size() > 1)
    m.masked_positions.push_back(1 + static_cast<int>(rng.below(seq.size() - 1)));
  for (int p: m.masked_positions) {
    m.targets.push_back(seq[p]);
    m.input[p] = featurize::BpeVocab::kMask;
  }
  return m;
}

/// Backbone plus a vocabulary projection trained to recover masked tokens.
class MaskedLanguageModel {
public:
  MaskedLanguageModel(SmilesBackbone &backbone, std::uint64_t seed)
      : backbone_(backbone) {
    Rng rng(seed, "mlm.head");
    head_ = nn::Linear(backbone.config().dim, backbone.config().vocab, rng);
  }

  /// Mean cross-entropy over the masked positions of a batch.
  nn::Tensor loss(const std::vector<MaskedSequence> &batch) const {
    std::vector<std::vector<int>> inputs;
    for (const MaskedSequence &m: batch)
      inputs.push_back(m.input);
    const TokenBatch t = make_token_batch(inputs, backbone_.config().max_len);
    std::vector<int> rows, targets;
    for (std::size_t s = 0; s < batch.size(); ++s) {
      for (std::size_t k = 0; k < batch[s].masked_positions.size(); ++k) {
        rows.push_back(static_cast<int>(s) * t.length +
                       batch[s].masked_positions[k]);
        targets.push_back(batch[s].targets[k]);
      }
    }
    if (rows.empty())
      throw EmptyBatch("no masked tokens in batch");
    nn::Tensor h = nn::gather_rows(backbone_.hidden(t), rows);
    return nn::cross_entropy(head_(h), targets);
  }

  void collect(nn::ParamList &out) const {
    backbone_.collect(out);
    head_.collect(out, "mlm.head", "mlm.head");
  }

private:
  SmilesBackbone &backbone_;
  nn::Linear head_;
};

/// Trains the backbone in place. Sequences holding only CLS are skipped.
/// A non-finite loss stops training and is reported through `diverged`.
inline MlmResult mlm_pretrain(SmilesBackbone &backbone,
                              const std::vector<std::vector<int>> &corpus,
                              const MlmConfig &cfg) {
  std::vector<int> usable;
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    if (corpus[k].size() > 1)
      usable.push_back(static_cast<int>(k));
  }
  MlmResult res;
  if (usable.empty())
    return res;

  MaskedLanguageModel model(backbone, cfg.seed);
  nn::ParamList params;
  model.collect(params);
  std::vector<bool> was_trainable;
  for (const nn::NamedParam &p: params)
    was_trainable.push_back(p.tensor.requires_grad());
  nn::set_trainable(params, true);
  nn::Adam opt(params, {}, cfg.lr);

  Rng order_rng(cfg.seed, "mlm.order"), mask_rng(cfg.seed, "mlm.mask");
  for (int epoch = 0; epoch < cfg.epochs && !res.diverged; ++epoch) {
    std::vector<int> order = usable;
    order_rng.shuffle(order);
    double total = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<MaskedSequence> batch;
      for (std::size_t k = start;
           k < std::min(order.size(), start + cfg.batch_size); ++k)
        batch.push_back(mask_tokens(corpus[order[k]], cfg.mask_rate, mask_rng));
      opt.zero_grad();
      nn::Tensor l = model.loss(batch);
      if (!std::isfinite(l.item())) {
        res.diverged = true;
        break;
      }
      l.backward();
      opt.step();
      total += l.item();
      ++batches;
    }
    if (batches > 0 && !res.diverged)
      res.epoch_loss.push_back(total / batches);
  }
  opt.zero_grad();
  for (std::size_t k = 0; k < params.size(); ++k)
    params[k].tensor.set_requires_grad(was_trainable[k]);
  return res;
}

}  // namespace moco::encoders
