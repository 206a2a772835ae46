//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance binary.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "moco/pipeline.hpp"

namespace moco::testing {

using featurize::BpeVocab;
using nn::Mat;
using pipeline::DatasetSplit;
using pipeline::FinetuneConfig;
using pipeline::Molecule;
using pipeline::MultiViewModel;
using pipeline::SplitMethod;
using pipeline::embed_molecules;
using pipeline::roc_auc;

inline double brute_auc(const std::vector<double> &p, const std::vector<double> &y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (y[i] == 1.0 && y[j] == 0.0) {
        pairs += 1.0;
        wins += p[i] > p[j] ? 1.0 : (p[i] == p[j] ? 0.5 : 0.0);
      }
    }
  }
  return wins / pairs;
}

// Each positive contributes the precision at its own score threshold.
inline double brute_ap(const std::vector<double> &p, const std::vector<double> &y) {
  double sum = 0.0, pos = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (y[i] != 1.0)
      continue;
    pos += 1.0;
    double hit = 0.0, tot = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (p[j] >= p[i]) {
        tot += 1.0;
        hit += y[j];
      }
    }
    sum += hit / tot;
  }
  return sum / pos;
}

inline std::vector<Molecule> with_labels(std::vector<Molecule> mols,
                                  const std::vector<double> &y) {
  for (std::size_t i = 0; i < mols.size(); ++i)
    mols[i].labels = { y[i] };
  return mols;
}

inline FinetuneConfig quick_finetune(int epochs) {
  FinetuneConfig fc;
  fc.epochs = epochs;
  fc.batch_size = 8;
  fc.seeds = { 0 };
  fc.lr = 1e-3;
  fc.head_lr = 1e-2;
  fc.split = SplitMethod::kRandom;
  return fc;
}

// Labels from a fixed linear rule on the fused embeddings of `model`,
// thresholded at the median.
inline std::vector<double> linear_rule_labels(const MultiViewModel &model,
                                       const std::vector<Molecule> &mols) {
  std::vector<int> all(mols.size());
  std::iota(all.begin(), all.end(), 0);
  const fusion::ViewSet vs = embed_molecules(model, mols, all);
  nn::NoGradGuard no_grad;
  const Mat z = model.fuse(vs).value();
  Rng rng(8);
  Eigen::VectorXd w(z.cols());
  for (Eigen::Index k = 0; k < w.size(); ++k)
    w(k) = rng.uniform(-1.0, 1.0);
  const Eigen::VectorXd s = z * w;
  std::vector<double> sorted(s.data(), s.data() + s.size());
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  std::vector<double> y;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    y.push_back(s(i) > median ? 1.0 : 0.0);
  return y;
}

// Plain loop over a GIN encoder and a linear head with the same seeds,
// shuffles and model selection as the pipeline.
inline Mat direct_gin_run(const encoders::ModelConfig &mc, const std::vector<Molecule> &mols,
                   const DatasetSplit &split, const FinetuneConfig &fc,
                   std::uint64_t seed) {
  encoders::GinEncoder gin(mc.dim, mc.gin, seed);
  Rng head_rng(seed, "head");
  nn::Linear head(mc.dim, 1, head_rng);
  nn::ParamList ps;
  gin.collect(ps);
  head.collect(ps, "head", "head");
  nn::Adam opt(ps, { { "head", fc.head_lr } }, fc.lr);
  Rng order_rng(seed, "finetune.order"), drop_rng(seed, "finetune.dropout");
  auto forward = [&](const std::vector<int> &idx, bool train) {
    std::vector<const featurize::MolViews *> b;
    for (int i: idx)
      b.push_back(&mols[i].frames.front());
    return head(gin.forward(encoders::make_graph_batch(b), { train, &drop_rng }));
  };
  auto labels = [&](const std::vector<int> &idx) {
    Mat y(static_cast<Eigen::Index>(idx.size()), 1);
    for (std::size_t k = 0; k < idx.size(); ++k)
      y(static_cast<Eigen::Index>(k), 0) = mols[idx[k]].labels[0];
    return y;
  };
  auto scores = [&](const std::vector<int> &idx) {
    nn::NoGradGuard no_grad;
    const Mat out = forward(idx, false).value();
    return std::vector<double>(out.data(), out.data() + out.rows());
  };
  auto as_vector = [](const Mat &m) {
    return std::vector<double>(m.data(), m.data() + m.rows());
  };
  std::vector<Mat> best = nn::snapshot(ps);
  double best_auc = -1.0;
  std::vector<int> order = split.train;
  for (int epoch = 1; epoch <= fc.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (std::size_t s = 0; s < order.size(); s += fc.batch_size) {
      std::vector<int> idx(order.begin() + s,
                           order.begin() + std::min(order.size(), s + fc.batch_size));
      opt.zero_grad();
      const Mat y = labels(idx);
      nn::bce_with_logits(forward(idx, true), y, Mat::Ones(y.rows(), 1)).backward();
      opt.step();
    }
    const double auc = roc_auc(scores(split.valid), as_vector(labels(split.valid)));
    if (auc > best_auc) {
      best_auc = auc;
      best = nn::snapshot(ps);
    }
  }
  nn::restore(ps, best);
  nn::NoGradGuard no_grad;
  return forward(split.test, false).value();
}

// Applies each merge to the whole sequence in priority order.
inline std::vector<std::string> sequential_merge_oracle(const std::string &s,
                                                 const BpeVocab &v) {
  std::vector<std::string> sym;
  for (char c: s)
    sym.emplace_back(1, c);
  for (const auto &[l, r]: v.merges()) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < sym.size(); ++i) {
      if (i + 1 < sym.size() && sym[i] == l && sym[i + 1] == r) {
        out.push_back(l + r);
        ++i;
      } else {
        out.push_back(sym[i]);
      }
    }
    sym = out;
  }
  return sym;
}

struct MorganCase {
  const char *smiles;
  std::vector<std::vector<std::uint32_t>> ids;
};

// Identifiers from tests/data/oracles/morgan_ids.py, radius 0 to 2.
inline const std::vector<MorganCase> &morgan_oracle_cases() {
  static const std::vector<MorganCase> cases {
    { "CCO",
      { { 2727025233u, 2370829251u, 3403627677u },
        { 2975790637u, 2647830304u, 1225624539u },
        { 823092168u, 2507343901u, 579304042u } } },
    { "c1ccccc1",
      { std::vector<std::uint32_t>(6, 1080669201u),
        std::vector<std::uint32_t>(6, 4224524616u),
        std::vector<std::uint32_t>(6, 242172004u) } },
    { "N[C@@H](C)C(=O)O",
      { { 638056785u, 2795951153u, 2727025233u, 1917538800u, 2525215324u,
          3403627677u },
        { 3730493959u, 2060975179u, 492017002u, 3907421186u, 3901029767u,
          212570475u },
        { 2479007725u, 1304888788u, 1976884197u, 178450388u, 2430274785u,
          1757364545u } } },
  };
  return cases;
}

}  // namespace moco::testing
