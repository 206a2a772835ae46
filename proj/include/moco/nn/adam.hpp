//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "moco/nn/layers.hpp"

namespace moco::nn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with one learning rate per parameter group. Parameters that
/// received no gradient in a step are left untouched.
class Adam {
public:
  Adam(ParamList params, std::map<std::string, double> group_lr,
       double default_lr, AdamOptions opts = {})
      : params_(std::move(params)), opts_(opts) {
    for (const NamedParam &p: params_) {
      auto it = group_lr.find(p.group);
      lr_.push_back(it == group_lr.end() ? default_lr : it->second);
      m_.push_back(Mat::Zero(p.tensor.rows(), p.tensor.cols()));
      v_.push_back(Mat::Zero(p.tensor.rows(), p.tensor.cols()));
      t_.push_back(0);
    }
  }

  void step() {
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Tensor t = params_[k].tensor;
      if (!t.has_grad())
        continue;
      const Mat &g = t.grad();
      ++t_[k];
      m_[k] = opts_.beta1 * m_[k] + (1.0 - opts_.beta1) * g;
      v_[k] = opts_.beta2 * v_[k] + (1.0 - opts_.beta2) * g.cwiseAbs2();
      const double c1 = 1.0 - std::pow(opts_.beta1, t_[k]);
      const double c2 = 1.0 - std::pow(opts_.beta2, t_[k]);
      t.mutable_value().array() -=
          lr_[k] * (m_[k].array() / c1) /
          ((v_[k].array() / c2).sqrt() + opts_.eps);
    }
  }

  void zero_grad() { zero_grads(params_); }

  const ParamList &params() const { return params_; }
  double lr(std::size_t k) const { return lr_.at(k); }

private:
  ParamList params_;
  AdamOptions opts_;
  std::vector<double> lr_;
  std::vector<Mat> m_, v_;
  std::vector<long> t_;
};

}  // namespace moco::nn
