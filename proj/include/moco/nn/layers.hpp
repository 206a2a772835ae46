//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "moco/nn/fused.hpp"
#include "moco/nn/ops.hpp"
#include "moco/nn/tensor.hpp"
#include "moco/util/rng.hpp"

namespace moco::nn {

/// A learnable leaf with a dotted name and an optimizer group.
struct NamedParam {
  std::string name;
  std::string group;
  Tensor tensor;
};

using ParamList = std::vector<NamedParam>;

inline Tensor glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out,
                             Rng &rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Mat w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < w.size(); ++i)
    w.data()[i] = rng.uniform(-limit, limit);
  return Tensor(std::move(w), true);
}

inline Tensor zeros_param(Eigen::Index rows, Eigen::Index cols) {
  return Tensor(Mat::Zero(rows, cols), true);
}

/// x · W + b with W stored fan_in × fan_out.
struct Linear {
  Tensor weight;
  Tensor bias;  // undefined when built without bias

  Linear() = default;

  Linear(int in, int out, Rng &rng, bool with_bias = true)
      : weight(glorot_uniform(in, out, rng)) {
    if (with_bias)
      bias = zeros_param(1, out);
  }

  Tensor operator()(const Tensor &x) const {
    Tensor y = matmul(x, weight);
    return bias.defined() ? add_row(y, bias) : y;
  }

  void collect(ParamList &out, const std::string &prefix,
               const std::string &group) const {
    out.push_back({ prefix + ".weight", group, weight });
    if (bias.defined())
      out.push_back({ prefix + ".bias", group, bias });
  }

  int in_features() const { return static_cast<int>(weight.rows()); }
  int out_features() const { return static_cast<int>(weight.cols()); }
};

/// Lookup table initialized like a Glorot-uniform matrix.
struct Embedding {
  Tensor table;

  Embedding() = default;
  Embedding(int rows, int dim, Rng &rng): table(glorot_uniform(rows, dim, rng)) { }

  Tensor operator()(const std::vector<int> &ids) const {
    return gather_rows(table, ids);
  }

  void collect(ParamList &out, const std::string &prefix,
               const std::string &group) const {
    out.push_back({ prefix + ".table", group, table });
  }
};

/// Linear → ReLU → Linear.
struct Mlp2 {
  Linear first;
  Linear second;

  Mlp2() = default;
  Mlp2(int in, int hidden, int out, Rng &rng)
      : first(in, hidden, rng), second(hidden, out, rng) { }

  Tensor operator()(const Tensor &x) const { return second(relu(first(x))); }

  void collect(ParamList &out, const std::string &prefix,
               const std::string &group) const {
    first.collect(out, prefix + ".0", group);
    second.collect(out, prefix + ".1", group);
  }
};

struct LayerNorm {
  Tensor gain;
  Tensor bias;

  LayerNorm() = default;
  explicit LayerNorm(int dim)
      : gain(Tensor(Mat::Ones(1, dim), true)), bias(zeros_param(1, dim)) { }

  Tensor operator()(const Tensor &x) const { return layer_norm(x, gain, bias); }

  void collect(ParamList &out, const std::string &prefix,
               const std::string &group) const {
    out.push_back({ prefix + ".gain", group, gain });
    out.push_back({ prefix + ".bias", group, bias });
  }
};

inline void set_trainable(const ParamList &params, bool on) {
  for (const NamedParam &p: params)
    p.tensor.set_requires_grad(on);
}

inline void zero_grads(const ParamList &params) {
  for (const NamedParam &p: params)
    p.tensor.zero_grad();
}

/// Deep copy of parameter values, for snapshots and diffs.
inline std::vector<Mat> snapshot(const ParamList &params) {
  std::vector<Mat> out;
  out.reserve(params.size());
  for (const NamedParam &p: params)
    out.push_back(p.tensor.value());
  return out;
}

inline void restore(const ParamList &params, const std::vector<Mat> &values) {
  for (std::size_t k = 0; k < params.size(); ++k)
    params[k].tensor.mutable_value() = values.at(k);
}

inline double squared_norm(const ParamList &params) {
  double s = 0.0;
  for (const NamedParam &p: params)
    s += p.tensor.value().squaredNorm();
  return s;
}

}  // namespace moco::nn
