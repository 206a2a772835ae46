//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "moco/nn.hpp"

namespace moco::nn {
namespace {

Tensor random_param(int r, int c, Rng &rng, double lo = -1.0, double hi = 1.0) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = rng.uniform(lo, hi);
  return Tensor(m, true);
}

// Fixed random projection turning any tensor into a scalar loss, so every
// output entry receives a distinct upstream gradient.
Tensor probe(const Tensor &t) {
  Rng rng(99);
  Mat w(t.rows(), t.cols());
  for (Eigen::Index i = 0; i < w.size(); ++i)
    w.data()[i] = rng.uniform(-1.0, 1.0);
  return sum(mul(t, Tensor(w)));
}

void expect_gradients(const std::string &what, const std::function<Tensor()> &f,
                      const ParamList &params, int samples = 40) {
  const GradCheckReport rep = gradcheck(f, params, samples, 3);
  EXPECT_LT(rep.max_rel_error, 1e-6) << what << " worst " << rep.worst;
  EXPECT_EQ(rep.checked, samples);
}

class OpGradientTest: public ::testing::Test {
protected:
  Rng rng_ { 1234 };
};

TEST_F(OpGradientTest, MatmulFamily) {
  Tensor a = random_param(3, 4, rng_), b = random_param(4, 5, rng_),
         c = random_param(5, 4, rng_), r = random_param(1, 5, rng_);
  ParamList ps { { "a", "", a }, { "b", "", b }, { "c", "", c }, { "r", "", r } };
  expect_gradients("matmul", [&] { return probe(add_row(matmul(a, b), r)); }, ps);
  expect_gradients("matmul_nt", [&] { return probe(matmul_nt(a, c)); }, ps);
  expect_gradients("transpose", [&] { return probe(transpose(a)); }, ps);
}

TEST_F(OpGradientTest, Elementwise) {
  Tensor a = random_param(3, 4, rng_), b = random_param(3, 4, rng_),
         s = random_param(1, 1, rng_);
  ParamList ps { { "a", "", a }, { "b", "", b }, { "s", "", s } };
  expect_gradients("mul/sub/add", [&] {
    return probe(add(mul(a, b), sub(scale(a, 0.3), b)));
  }, ps);
  expect_gradients("scale_by", [&] { return probe(scale_by(a, s)); }, ps);
  expect_gradients("tanh", [&] { return probe(tanh(a)); }, ps);
  expect_gradients("relu", [&] { return probe(relu(add(a, b))); }, ps);
  expect_gradients("broadcast", [&] {
    return probe(broadcast_rows(slice_rows(a, 1, 1), 5));
  }, ps);
}

TEST_F(OpGradientTest, ReductionsAndLayout) {
  Tensor a = random_param(5, 3, rng_), b = random_param(2, 3, rng_),
         c = random_param(5, 2, rng_);
  ParamList ps { { "a", "", a }, { "b", "", b }, { "c", "", c } };
  expect_gradients("sum/mean", [&] {
    return add(scale(sum(mul(a, a)), 0.5), mean(mul(b, b)));
  }, ps);
  expect_gradients("rows", [&] { return probe(add(sum_rows(a), mean_rows(b))); },
                   ps);
  expect_gradients("concat", [&] {
    return add(probe(concat_rows({ a, b, a })), probe(concat_cols({ a, c })));
  }, ps);
  expect_gradients("slices", [&] {
    return add(probe(slice_rows(a, 1, 3)), probe(slice_cols(c, 1, 1)));
  }, ps);
  expect_gradients("gather/scatter", [&] {
    Tensor g = gather_rows(a, { 4, 0, 0, 2 });
    return probe(scatter_add_rows(g, { 1, 1, 0, 2 }, 3));
  }, ps);
  expect_gradients("segment_mean", [&] {
    return probe(segment_mean(a, { 0, 0, 1, 2, 2 }, 3));
  }, ps);
  expect_gradients("max", [&] {
    return probe(max_elementwise({ slice_rows(a, 0, 2), b, slice_rows(a, 3, 2) }));
  }, ps);
}

TEST_F(OpGradientTest, Normalizations) {
  Tensor a = random_param(4, 6, rng_), g = random_param(1, 6, rng_),
         b = random_param(1, 6, rng_);
  ParamList ps { { "a", "", a }, { "g", "", g }, { "b", "", b } };
  expect_gradients("l2", [&] { return probe(l2_normalize_rows(a)); }, ps);
  expect_gradients("log_softmax", [&] { return probe(log_softmax_rows(a)); }, ps);
  expect_gradients("softmax", [&] { return probe(softmax_rows(a)); }, ps);
  expect_gradients("layer_norm", [&] { return probe(layer_norm(a, g, b)); }, ps);
}

TEST_F(OpGradientTest, Losses) {
  Tensor x = random_param(4, 5, rng_, -3.0, 3.0);
  ParamList ps { { "x", "", x } };
  expect_gradients("cross_entropy", [&] {
    return cross_entropy(x, { 0, 4, 2, 2 });
  }, ps);
  Mat t(4, 5), m(4, 5);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    t.data()[i] = rng_.uniform() < 0.5 ? 0.0 : 1.0;
    m.data()[i] = rng_.uniform() < 0.2 ? 0.0 : 1.0;
  }
  t(0, 0) = std::nan("");
  m(0, 0) = 0.0;
  expect_gradients("bce", [&] { return bce_with_logits(x, t, m); }, ps);
  expect_gradients("mse", [&] { return masked_mse(x, t, m); }, ps);
  EXPECT_TRUE(std::isfinite(bce_with_logits(x, t, m).item()));
}

TEST_F(OpGradientTest, AttentionWithKeyMask) {
  AttentionLayout lay { 2, 4, 2, { 1, 1, 1, 0, 1, 1, 0, 0 } };
  Tensor q = random_param(8, 6, rng_), k = random_param(8, 6, rng_),
         v = random_param(8, 4, rng_);
  ParamList ps { { "q", "", q }, { "k", "", k }, { "v", "", v } };
  expect_gradients("attention",
                   [&] { return probe(multihead_attention(q, k, v, lay)); }, ps,
                   60);
  for (int s = 0; s < 2; ++s) {
    for (int h = 0; h < 2; ++h) {
      const Mat a = attention_probabilities(q, k, lay, s, h);
      for (int i = 0; i < 4; ++i)
        EXPECT_NEAR(a.row(i).sum(), 1.0, 1e-12);
      EXPECT_EQ(a(0, 3 - s), 0.0);
    }
  }
}

TEST_F(OpGradientTest, ContinuousFilterConvolution) {
  Tensor h = random_param(3, 4, rng_), f = random_param(5, 4, rng_);
  ParamList ps { { "h", "", h }, { "f", "", f } };
  expect_gradients("cfconv", [&] {
    return probe(cfconv(h, f, { 0, 0, 1, 2, 2 }, { 0, 1, 1, 0, 2 }));
  }, ps);
}

TEST(TapeTest, SharedSubexpressionsAccumulate) {
  Tensor x(Mat::Constant(1, 1, 3.0), true);
  Tensor y = mul(x, x);
  add(y, y).backward();
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 12.0);
  x.zero_grad();
  {
    NoGradGuard guard;
    Tensor z = mul(x, x);
    EXPECT_FALSE(z.requires_grad());
  }
  EXPECT_TRUE(mul(x, x).requires_grad());
}

TEST(TapeTest, FrozenLeavesReceiveNoGradient) {
  Tensor w(Mat::Ones(2, 2), false), x(Mat::Ones(2, 2), true);
  sum(matmul(x, w)).backward();
  EXPECT_FALSE(w.has_grad());
  EXPECT_TRUE(x.has_grad());
}

TEST(TapeTest, ZeroNormIsAnError) {
  Tensor z(Mat::Zero(1, 3), true);
  EXPECT_THROW(l2_normalize_rows(z), ZeroProjection);
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  Tensor p(Mat::Zero(1, 2), true);
  Adam opt({ { "p", "g", p } }, { { "g", 0.01 } }, 1.0);
  p.mutable_grad() = Mat::Constant(1, 2, 4.0);
  p.mutable_grad()(0, 1) = -0.5;
  opt.step();
  // m̂ = g and v̂ = g², so each entry moves by lr · g / (|g| + eps).
  EXPECT_NEAR(p.value()(0, 0), -0.01 * 4.0 / (4.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p.value()(0, 1), 0.01 * 0.5 / (0.5 + 1e-8), 1e-15);
  p.zero_grad();
  const Mat before = p.value();
  opt.step();
  EXPECT_EQ(p.value(), before);
}

TEST(AdamTest, MinimizesQuadratic) {
  Tensor p(Mat::Constant(1, 3, 2.0), true);
  Adam opt({ { "p", "", p } }, {}, 0.05);
  for (int it = 0; it < 500; ++it) {
    opt.zero_grad();
    sum(mul(p, p)).backward();
    opt.step();
  }
  EXPECT_LT(p.value().cwiseAbs().maxCoeff(), 1e-2);
}

TEST(CheckpointTest, RoundTripIsExact) {
  Rng rng(5);
  Linear lin(3, 2, rng);
  lin.bias.mutable_value()(0, 1) = 1.0 / 3.0;
  ParamList ps;
  lin.collect(ps, "lin", "g");
  Checkpoint c = make_checkpoint(ps, "abc");
  c.meta["seed"] = "5";
  std::stringstream ss;
  write_checkpoint(ss, c);
  const Checkpoint back = read_checkpoint(ss);
  EXPECT_EQ(back.config_hash, "abc");
  EXPECT_EQ(back.meta.at("seed"), "5");
  EXPECT_TRUE(back.has_prefix("lin."));
  EXPECT_FALSE(back.has_prefix("fusion."));

  Linear other(3, 2, rng);
  ParamList ops;
  other.collect(ops, "lin", "g");
  load_params(back, ops, "abc");
  EXPECT_EQ(other.weight.value(), lin.weight.value());
  EXPECT_EQ(other.bias.value(), lin.bias.value());
}

TEST(CheckpointTest, RefusesMismatches) {
  Rng rng(5);
  Linear lin(3, 2, rng), wide(3, 4, rng);
  ParamList ps, wps;
  lin.collect(ps, "lin", "g");
  wide.collect(wps, "lin", "g");
  const Checkpoint c = make_checkpoint(ps, "abc");
  EXPECT_THROW(load_params(c, ps, "other"), IncompatibleCheckpoint);
  EXPECT_THROW(load_params(c, wps, "abc"), IncompatibleCheckpoint);
  ParamList missing { { "nope", "g", lin.weight } };
  EXPECT_THROW(load_params(c, missing, "abc"), IncompatibleCheckpoint);
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt"), MissingCheckpoint);
  std::stringstream bad("moco-checkpoint 7\n");
  EXPECT_THROW(read_checkpoint(bad), IncompatibleCheckpoint);
}

TEST(RngTest, StreamsAreDeterministicAndIndependent) {
  Rng a(7, "gin"), b(7, "gin"), c(7, "schnet");
  bool differ = false;
  for (int i = 0; i < 10; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    differ = differ || x != c.uniform();
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  EXPECT_TRUE(differ);
  std::vector<int> v { 0, 1, 2, 3, 4, 5 };
  Rng r(1);
  r.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int> { 0, 1, 2, 3, 4, 5 }));
}

TEST(DropoutTest, ScalesKeptEntries) {
  Rng rng(3);
  Tensor x(Mat::Ones(50, 40), true);
  Tensor y = dropout(x, 0.5, rng);
  int kept = 0;
  for (Eigen::Index i = 0; i < y.value().size(); ++i) {
    const double v = y.value().data()[i];
    EXPECT_TRUE(v == 0.0 || v == 2.0);
    kept += v != 0.0;
  }
  EXPECT_NEAR(kept / 2000.0, 0.5, 0.05);
  Rng rng2(3);
  EXPECT_EQ(dropout(x, 0.0, rng2).node(), x.node());
}

}  // namespace
}  // namespace moco::nn
