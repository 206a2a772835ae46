//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "moco/nn/layers.hpp"
#include "moco/util/rng.hpp"

namespace moco::nn {

struct GradCheckReport {
  int checked = 0;
  double max_rel_error = 0.0;
  std::string worst;  // "name[index]" of the worst entry
};

/// Compares analytic gradients of a scalar loss against central
/// differences on `samples` entries drawn uniformly from params.
/// Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheckReport gradcheck(const std::function<Tensor()> &loss,
                                 const ParamList &params, int samples,
                                 std::uint64_t seed, double h = 1e-5,
                                 double floor = 1e-6) {
  zero_grads(params);
  loss().backward();
  std::vector<Mat> analytic;
  for (const NamedParam &p: params) {
    analytic.push_back(p.tensor.has_grad()
                           ? p.tensor.grad()
                           : Mat::Zero(p.tensor.rows(), p.tensor.cols()));
  }
  zero_grads(params);

  std::vector<Eigen::Index> sizes;
  Eigen::Index total = 0;
  for (const NamedParam &p: params) {
    sizes.push_back(p.tensor.value().size());
    total += sizes.back();
  }
  GradCheckReport rep;
  if (total == 0)
    return rep;
  Rng rng(seed, "gradcheck");
  NoGradGuard no_grad;
  for (int s = 0; s < samples; ++s) {
    Eigen::Index flat = static_cast<Eigen::Index>(rng.below(total));
    std::size_t k = 0;
    while (flat >= sizes[k])
      flat -= sizes[k++];
    double &x = params[k].tensor.mutable_value().data()[flat];
    const double orig = x;
    x = orig + h;
    const double up = loss().item();
    x = orig - h;
    const double down = loss().item();
    x = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic[k].data()[flat];
    const double err = std::abs(a - numeric) /
                       std::max({ std::abs(a), std::abs(numeric), floor });
    ++rep.checked;
    if (err > rep.max_rel_error || rep.worst.empty()) {
      rep.max_rel_error = std::max(rep.max_rel_error, err);
      if (err >= rep.max_rel_error)
        rep.worst = params[k].name + "[" + std::to_string(flat) + "]";
    }
  }
  return rep;
}

}  // namespace moco::nn
