//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "moco/encoders.hpp"
#include "moco/nn.hpp"
#include "support/views.hpp"

namespace moco::encoders {
namespace {

using featurize::BpeVocab;
using featurize::MolViews;
using nn::Mat;
using nn::Tensor;

const BpeVocab &small_vocab() {
  static const BpeVocab v = featurize::bpe_train(testing::corpus_smiles(), 64);
  return v;
}

std::map<std::string, Mat> values(const nn::ParamList &ps) {
  std::map<std::string, Mat> out;
  for (const nn::NamedParam &p: ps)
    out[p.name] = p.tensor.value();
  return out;
}

template <class Enc>
Mat embed(const Enc &enc, const std::vector<const MolViews *> &mols) {
  nn::NoGradGuard no_grad;
  return enc.forward(make_graph_batch(mols)).value();
}

Tensor probe(const Tensor &t) {
  Rng rng(17);
  Mat w(t.rows(), t.cols());
  for (Eigen::Index i = 0; i < w.size(); ++i)
    w.data()[i] = rng.uniform(-1.0, 1.0);
  return nn::sum(nn::mul(t, Tensor(w)));
}

template <class Enc>
void expect_gradients(const Enc &enc, const std::vector<const MolViews *> &mols) {
  nn::ParamList ps;
  enc.collect(ps);
  const GraphBatch b = make_graph_batch(mols);
  const auto rep =
      nn::gradcheck([&] { return probe(enc.forward(b)); }, ps, 32, 11);
  EXPECT_EQ(rep.checked, 32);
  EXPECT_LT(rep.max_rel_error, 1e-4) << rep.worst;
}

Mat relu(const Mat &m) { return m.cwiseMax(0.0); }

constexpr const char *kTenAtoms = "CC(=O)Nc1ccc(O)cc1";  // paracetamol, 11

class GinTest: public ::testing::Test {
protected:
  GinConfig cfg_ { 3, 0.0 };
  GinEncoder enc_ { 24, cfg_, 5 };
};

TEST_F(GinTest, SingleAtomMatchesDirectEvaluation) {
  const MolViews v = testing::views_for("C", small_vocab());
  nn::ParamList ps;
  enc_.collect(ps);
  auto p = values(ps);
  Mat h = p["encoder.2d.atom_type.table"].row(featurize::atom_type_index("C")) +
          p["encoder.2d.chirality.table"].row(0);
  for (int l = 0; l < cfg_.layers; ++l) {
    const std::string pre = "encoder.2d.layer" + std::to_string(l) + ".mlp.";
    Mat hid = relu((h * p[pre + "0.weight"]) + p[pre + "0.bias"]);
    h = hid * p[pre + "1.weight"] + p[pre + "1.bias"];
    if (l + 1 < cfg_.layers)
      h = relu(h);
  }
  EXPECT_LT((embed(enc_, { &v }) - h).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(GinTest, PermutationInvariance) {
  const MolViews v = testing::views_for(kTenAtoms, small_vocab());
  const Mat ref = embed(enc_, { &v });
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const MolViews w = testing::permute_atoms(
        v, testing::random_permutation(v.num_atoms, rng));
    EXPECT_LT((embed(enc_, { &w }) - ref).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST_F(GinTest, DifferentAtomAttributeChangesEmbedding) {
  const MolViews a = testing::views_for("CCCCO", small_vocab());
  const MolViews b = testing::views_for("CCCCN", small_vocab());
  EXPECT_GT((embed(enc_, { &a }) - embed(enc_, { &b })).cwiseAbs().maxCoeff(),
            1e-6);
}

TEST_F(GinTest, BatchCompositionDoesNotLeak) {
  const MolViews a = testing::views_for(kTenAtoms, small_vocab());
  const MolViews b = testing::views_for("c1ccncc1", small_vocab());
  const Mat both = embed(enc_, { &b, &a });
  EXPECT_LT((both.row(1) - embed(enc_, { &a })).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(GinTest, Gradients) {
  const MolViews a = testing::views_for(kTenAtoms, small_vocab());
  const MolViews b = testing::views_for("C/C=C/Cl", small_vocab());
  expect_gradients(enc_, { &a, &b });
}

class SchNetTest: public ::testing::Test {
protected:
  SchNetConfig cfg_ = [] {
    SchNetConfig c;
    c.hidden = 16;
    c.layers = 3;
    return c;
  }();
  SchNetEncoder enc_ { 20, cfg_, 9 };
};

TEST_F(SchNetTest, GaussianPeaksAtCenters) {
  const double step = cfg_.rbf_max / (cfg_.rbf - 1);
  for (int k = 0; k < cfg_.rbf; k += 7)
    EXPECT_DOUBLE_EQ(rbf_expand(step * k, cfg_)(k), 1.0);
}

TEST_F(SchNetTest, SingleAtomMatchesClosedForm) {
  featurize::MolViews v = testing::views_for("O", small_vocab());
  v.positions = featurize::Positions::Zero(1, 3);
  nn::ParamList ps;
  enc_.collect(ps);
  auto p = values(ps);
  Mat rbf(1, cfg_.rbf);
  const double step = cfg_.rbf_max / (cfg_.rbf - 1);
  for (int k = 0; k < cfg_.rbf; ++k)
    rbf(0, k) = std::exp(-cfg_.gamma * (step * k) * (step * k));
  Mat h = p["encoder.3d.atom_type.table"].row(featurize::atom_type_index("O"));
  for (int l = 0; l < cfg_.layers; ++l) {
    const std::string pre = "encoder.3d.layer" + std::to_string(l);
    Mat w = rbf * p[pre + ".filter.weight"] + p[pre + ".filter.bias"];
    Mat m = h.cwiseProduct(w);
    Mat u = relu(m * p[pre + ".update.0.weight"] + p[pre + ".update.0.bias"]) *
                p[pre + ".update.1.weight"] +
            p[pre + ".update.1.bias"];
    h = u + h;
  }
  Mat z = h * p["encoder.3d.out.weight"] + p["encoder.3d.out.bias"];
  EXPECT_LT((embed(enc_, { &v }) - z).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(SchNetTest, RigidMotionInvariance) {
  MolViews v = testing::views_for(kTenAtoms, small_vocab());
  const Mat ref = embed(enc_, { &v });
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    MolViews w = v;
    w.positions = testing::rigid_motion(*v.positions, rng);
    EXPECT_LT((embed(enc_, { &w }) - ref).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST_F(SchNetTest, PermutationInvariance) {
  const MolViews v = testing::views_for(kTenAtoms, small_vocab());
  const Mat ref = embed(enc_, { &v });
  Rng rng(22);
  const MolViews w =
      testing::permute_atoms(v, testing::random_permutation(v.num_atoms, rng));
  EXPECT_LT((embed(enc_, { &w }) - ref).cwiseAbs().maxCoeff(), 1e-9);
}

TEST_F(SchNetTest, CoincidentAtomsAreAllowed) {
  MolViews v = testing::views_for("CC", small_vocab());
  v.positions = featurize::Positions::Zero(2, 3);
  EXPECT_TRUE(embed(enc_, { &v }).allFinite());
  (*v.positions)(0, 0) = std::nan("");
  EXPECT_THROW(embed(enc_, { &v }), DegenerateGeometry);
  v.positions.reset();
  EXPECT_THROW(embed(enc_, { &v }), ShapeError);
}

TEST_F(SchNetTest, CutoffDropsDistantPairs) {
  SchNetConfig c = cfg_;
  c.cutoff = 2.0;
  MolViews v = testing::views_for("CCCC", small_vocab());
  const PairList all = make_pairs(make_graph_batch({ &v }), cfg_);
  const PairList near = make_pairs(make_graph_batch({ &v }), c);
  EXPECT_EQ(all.i.size(), 16U);
  EXPECT_LT(near.i.size(), all.i.size());
  EXPECT_GE(near.i.size(), 4U);
}

TEST_F(SchNetTest, Gradients) {
  const MolViews a = testing::views_for(kTenAtoms, small_vocab());
  const MolViews b = testing::views_for("OCCN", small_vocab());
  expect_gradients(enc_, { &a, &b });
}

class FingerprintTest: public ::testing::Test {
protected:
  FpConfig cfg_ = [] {
    FpConfig c;
    c.bits = 64;
    c.dim = 16;
    c.heads = 4;
    return c;
  }();
  FingerprintEncoder enc_ { 12, cfg_, 4 };
};

TEST_F(FingerprintTest, AllZeroInputMatchesDirectEvaluation) {
  MolViews v = testing::views_for("C", small_vocab(), cfg_.bits);
  std::fill(v.fingerprint.begin(), v.fingerprint.end(), 0);
  nn::ParamList ps;
  enc_.collect(ps);
  auto p = values(ps);
  Mat x(cfg_.bits, cfg_.dim);
  for (int pos = 0; pos < cfg_.bits; ++pos) {
    for (int i = 0; i < cfg_.dim / 2; ++i) {
      const double ang = pos / std::pow(10000.0, 2.0 * i / cfg_.dim);
      x(pos, 2 * i) = p["encoder.fp.value.table"](0, 2 * i) + std::sin(ang);
      x(pos, 2 * i + 1) = p["encoder.fp.value.table"](0, 2 * i + 1) +
                          std::cos(ang);
    }
  }
  const Mat q = x * p["encoder.fp.wq.weight"], k = x * p["encoder.fp.wk.weight"],
            val = x * p["encoder.fp.wv.weight"];
  const int dh = cfg_.dim / cfg_.heads;
  Mat concat(cfg_.bits, cfg_.dim);
  for (int h = 0; h < cfg_.heads; ++h) {
    Mat s = q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose() /
            std::sqrt(static_cast<double>(dh));
    for (int r = 0; r < s.rows(); ++r) {
      double total = 0.0;
      for (int c = 0; c < s.cols(); ++c)
        total += std::exp(s(r, c));
      for (int c = 0; c < s.cols(); ++c)
        s(r, c) = std::exp(s(r, c)) / total;
    }
    concat.middleCols(h * dh, dh) = s * val.middleCols(h * dh, dh);
  }
  const Mat z = concat.colwise().sum() * p["encoder.fp.out.weight"] +
                p["encoder.fp.out.bias"];
  EXPECT_LT((embed(enc_, { &v }) - z).cwiseAbs().maxCoeff(), 1e-10);
}

TEST_F(FingerprintTest, AttentionRowsSumToOne) {
  const MolViews v = testing::views_for(kTenAtoms, small_vocab(), cfg_.bits);
  const GraphBatch b = make_graph_batch({ &v });
  for (int h = 0; h < cfg_.heads; ++h) {
    const Mat a = enc_.attention(b, 0, h);
    ASSERT_EQ(a.rows(), cfg_.bits);
    EXPECT_LT((a.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  }
}

TEST_F(FingerprintTest, OneBitChangesEmbedding) {
  MolViews a = testing::views_for(kTenAtoms, small_vocab(), cfg_.bits);
  MolViews b = a;
  b.fingerprint[5] ^= 1;
  EXPECT_GT((embed(enc_, { &a }) - embed(enc_, { &b })).cwiseAbs().maxCoeff(),
            0.0);
}

TEST_F(FingerprintTest, BatchCompositionDoesNotLeak) {
  const MolViews a = testing::views_for(kTenAtoms, small_vocab(), cfg_.bits);
  const MolViews b = testing::views_for("CCN", small_vocab(), cfg_.bits);
  const Mat both = embed(enc_, { &b, &a });
  EXPECT_LT((both.row(1) - embed(enc_, { &a })).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(FingerprintTest, WrongLengthIsShapeError) {
  const MolViews a = testing::views_for("CCN", small_vocab(), 128);
  EXPECT_THROW(embed(enc_, { &a }), ShapeError);
}

TEST_F(FingerprintTest, Gradients) {
  const MolViews a = testing::views_for(kTenAtoms, small_vocab(), cfg_.bits);
  const MolViews b = testing::views_for("CCN", small_vocab(), cfg_.bits);
  expect_gradients(enc_, { &a, &b });
}

class FingerprintMlpTest: public ::testing::Test {
protected:
  FpConfig cfg_ = [] {
    FpConfig c;
    c.bits = 64;
    c.mlp = true;
    return c;
  }();
  FingerprintMlpEncoder enc_ { 10, cfg_, 4 };
};

TEST_F(FingerprintMlpTest, ZeroVectorUsesBiasPathOnly) {
  MolViews v = testing::views_for("C", small_vocab(), cfg_.bits);
  std::fill(v.fingerprint.begin(), v.fingerprint.end(), 0);
  const nn::Mlp2 &m = enc_.mlp();
  m.first.bias.mutable_value().setConstant(0.25);
  m.second.bias.mutable_value().setConstant(-0.5);
  const Mat expect =
      relu(m.first.bias.value()) * m.second.weight.value() + m.second.bias.value();
  EXPECT_LT((embed(enc_, { &v }) - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST_F(FingerprintMlpTest, FirstLayerIsAffine) {
  Rng rng(8);
  const nn::Linear &l = enc_.mlp().first;
  l.bias.mutable_value().setConstant(0.1);
  for (int trial = 0; trial < 5; ++trial) {
    Mat x(1, cfg_.bits), y(1, cfg_.bits);
    for (int k = 0; k < cfg_.bits; ++k) {
      x(0, k) = rng.uniform() < 0.3;
      y(0, k) = rng.uniform() < 0.3;
    }
    nn::NoGradGuard g;
    auto f = [&](const Mat &in) { return l(Tensor(in)).value(); };
    const Mat r = f(x + y) - f(x) - f(y) + f(Mat::Zero(1, cfg_.bits));
    EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST_F(FingerprintMlpTest, Gradients) {
  const MolViews a = testing::views_for(kTenAtoms, small_vocab(), cfg_.bits);
  const MolViews b = testing::views_for("CCN", small_vocab(), cfg_.bits);
  expect_gradients(enc_, { &a, &b });
}

class SmilesTest: public ::testing::Test {
protected:
  SmilesConfig cfg_ = [] {
    SmilesConfig c;
    c.dim = 16;
    c.heads = 4;
    c.ffn = 24;
    c.max_len = 40;
    c.vocab = small_vocab().size();
    return c;
  }();
  SmilesEncoder enc_ { 12, cfg_, 6 };
};

TEST_F(SmilesTest, ClsOnlySequence) {
  MolViews v = testing::views_for("C", small_vocab());
  v.tokens = { BpeVocab::kCls };
  const Mat a = embed(enc_, { &v });
  EXPECT_EQ(a, embed(enc_, { &v }));
  nn::NoGradGuard g;
  const Mat cls =
      enc_.backbone().cls(make_token_batch({ v.tokens }, cfg_.max_len)).value();
  nn::ParamList ps;
  enc_.collect(ps);
  auto p = values(ps);
  const Mat direct =
      relu(cls * p["encoder.sm.head.0.weight"] + p["encoder.sm.head.0.bias"]) *
          p["encoder.sm.head.1.weight"] +
      p["encoder.sm.head.1.bias"];
  EXPECT_LT((a - direct).cwiseAbs().maxCoeff(), 1e-14);
}

TEST_F(SmilesTest, PaddingDoesNotChangeCls) {
  const MolViews a = testing::views_for("CCO", small_vocab());
  const MolViews b = testing::views_for(kTenAtoms, small_vocab());
  ASSERT_LT(a.tokens.size(), b.tokens.size());
  const Mat alone = embed(enc_, { &a });
  const Mat padded = embed(enc_, { &a, &b });
  EXPECT_LT((padded.row(0) - alone).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(SmilesTest, FrozenBackboneStaysFixed) {
  const MolViews a = testing::views_for(kTenAtoms, small_vocab());
  nn::ParamList all, trainable;
  enc_.collect_all(all);
  enc_.collect(trainable);
  EXPECT_LT(trainable.size(), all.size());
  const auto before = nn::snapshot(all);
  nn::Adam opt(trainable, {}, 1e-2);
  probe(enc_.forward(make_graph_batch({ &a }))).backward();
  opt.step();
  const auto after = nn::snapshot(all);
  bool head_changed = false;
  for (std::size_t k = 0; k < all.size(); ++k) {
    const bool backbone = all[k].group == "encoder.sm.backbone";
    if (backbone) {
      EXPECT_EQ(before[k], after[k]) << all[k].name;
      EXPECT_FALSE(all[k].tensor.has_grad());
    } else {
      head_changed = head_changed || before[k] != after[k];
    }
  }
  EXPECT_TRUE(head_changed);
}

TEST_F(SmilesTest, TooLongSequence) {
  MolViews a = testing::views_for("CCO", small_vocab());
  a.tokens.assign(cfg_.max_len + 1, small_vocab().id("C"));
  a.tokens[0] = BpeVocab::kCls;
  EXPECT_THROW(embed(enc_, { &a }), SequenceTooLong);
}

TEST_F(SmilesTest, Gradients) {
  const MolViews a = testing::views_for(kTenAtoms, small_vocab());
  const MolViews b = testing::views_for("CCN", small_vocab());
  expect_gradients(enc_, { &a, &b });
  enc_.set_frozen(false);
  expect_gradients(enc_, { &a, &b });
}

TEST(MlmTest, MaskingRules) {
  Rng rng(1);
  const std::vector<int> seq { BpeVocab::kCls, 7, 8, 9 };
  for (int trial = 0; trial < 50; ++trial) {
    const MaskedSequence m = mask_tokens(seq, 0.15, rng);
    ASSERT_FALSE(m.masked_positions.empty());
    EXPECT_EQ(m.input[0], BpeVocab::kCls);
    for (std::size_t k = 0; k < m.masked_positions.size(); ++k) {
      EXPECT_EQ(m.input[m.masked_positions[k]], BpeVocab::kMask);
      EXPECT_EQ(m.targets[k], seq[m.masked_positions[k]]);
    }
  }
  EXPECT_TRUE(mask_tokens({ BpeVocab::kCls }, 0.15, rng).masked_positions.empty());
}

SmilesConfig mlm_config(int vocab) {
  SmilesConfig c;
  c.dim = 16;
  c.heads = 2;
  c.ffn = 32;
  c.max_len = 64;
  c.vocab = vocab;
  return c;
}

TEST(MlmTest, InitialLossNearChance) {
  const auto corpus = testing::corpus_smiles();
  std::vector<std::vector<int>> seqs;
  for (std::size_t k = 0; k < 64; ++k)
    seqs.push_back(featurize::bpe_encode(corpus[k], small_vocab()));
  SmilesBackbone bb(mlm_config(small_vocab().size()), 3);
  MaskedLanguageModel model(bb, 3);
  Rng rng(4);
  std::vector<MaskedSequence> batch;
  for (const auto &s: seqs)
    batch.push_back(mask_tokens(s, 0.15, rng));
  nn::NoGradGuard g;
  const double chance = std::log(static_cast<double>(small_vocab().size()));
  EXPECT_NEAR(model.loss(batch).item(), chance, 0.15 * chance);
}

TEST(MlmTest, TrivialCorpusIsLearned) {
  const BpeVocab v = featurize::bpe_train({ "C" }, 1);
  std::vector<std::vector<int>> seqs(32, featurize::bpe_encode("C", v));
  SmilesBackbone bb(mlm_config(v.size()), 3);
  MlmConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 8;
  cfg.lr = 1e-2;
  const MlmResult r = mlm_pretrain(bb, seqs, cfg);
  ASSERT_EQ(r.epoch_loss.size(), 30U);
  EXPECT_LT(r.epoch_loss.back(), 0.01);
}

TEST(MlmTest, SeedReproducesTrace) {
  const auto corpus = testing::corpus_smiles();
  std::vector<std::vector<int>> seqs;
  for (std::size_t k = 0; k < 40; ++k)
    seqs.push_back(featurize::bpe_encode(corpus[k], small_vocab()));
  MlmConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  auto run = [&] {
    SmilesBackbone bb(mlm_config(small_vocab().size()), 3);
    return mlm_pretrain(bb, seqs, cfg).epoch_loss;
  };
  const auto a = run();
  EXPECT_EQ(a, run());
  ASSERT_EQ(a.size(), 2U);
  EXPECT_LT(a[1], a[0]);
}

TEST(MlmTest, BackboneTrainabilityRestored) {
  const auto corpus = testing::corpus_smiles();
  std::vector<std::vector<int>> seqs { featurize::bpe_encode(corpus[0], small_vocab()) };
  SmilesBackbone bb(mlm_config(small_vocab().size()), 3);
  nn::ParamList ps;
  bb.collect(ps);
  nn::set_trainable(ps, false);
  const auto before = nn::snapshot(ps);
  MlmConfig cfg;
  cfg.epochs = 1;
  mlm_pretrain(bb, seqs, cfg);
  EXPECT_FALSE(ps[0].tensor.requires_grad());
  EXPECT_NE(nn::snapshot(ps)[0], before[0]);
}

}  // namespace
}  // namespace moco::encoders
