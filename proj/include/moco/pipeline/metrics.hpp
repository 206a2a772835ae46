//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "moco/error.hpp"

namespace moco::pipeline {

enum class Metric { kRocAuc, kAp, kMae, kRmse };

constexpr std::string_view metric_name(Metric m) {
  switch (m) {
  case Metric::kRocAuc:
    return "roc_auc";
  case Metric::kAp:
    return "ap";
  case Metric::kMae:
    return "mae";
  case Metric::kRmse:
    return "rmse";
  }
  return "?";
}

constexpr bool higher_is_better(Metric m) {
  return m == Metric::kRocAuc || m == Metric::kAp;
}

namespace detail {

inline void check_aligned(const std::vector<double> &preds,
                          const std::vector<double> &targets) {
  if (preds.size() != targets.size())
    throw ShapeError("metrics: " + std::to_string(preds.size()) +
                     " predictions for " + std::to_string(targets.size()) +
                     " targets");
  if (preds.empty())
    throw EmptyBatch("metrics: no samples");
}

inline int count_positives(const std::vector<double> &targets) {
  int pos = 0;
  for (double t: targets) {
    if (t != 0.0 && t != 1.0)
      throw DataError("binary metric needs 0/1 targets");
    pos += t == 1.0;
  }
  if (pos == 0 || pos == static_cast<int>(targets.size()))
    throw SingleClass("binary metric needs both classes among the targets");
  return pos;
}

/// 1-based ranks with ties sharing their mean rank.
inline std::vector<double> midranks(const std::vector<double> &x) {
  std::vector<int> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return x[a] < x[b]; });
  std::vector<double> rank(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]])
      ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace detail

/// Mann-Whitney statistic; tied scores count half.
inline double roc_auc(const std::vector<double> &preds,
                      const std::vector<double> &targets) {
  detail::check_aligned(preds, targets);
  const double pos = detail::count_positives(targets);
  const double neg = static_cast<double>(targets.size()) - pos;
  const std::vector<double> rank = detail::midranks(preds);
  double sum = 0.0;
  for (std::size_t i = 0; i < rank.size(); ++i) {
    if (targets[i] == 1.0)
      sum += rank[i];
  }
  return (sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

/// Step-wise average precision Σ (R_k − R_{k−1}) P_k over distinct
/// score thresholds, highest first.
inline double average_precision(const std::vector<double> &preds,
                                const std::vector<double> &targets) {
  detail::check_aligned(preds, targets);
  const double pos = detail::count_positives(targets);
  std::vector<int> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return preds[a] > preds[b]; });
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (targets[order[i]] == 1.0 ? tp : fp) += 1.0;
    if (i + 1 < order.size() && preds[order[i + 1]] == preds[order[i]])
      continue;
    const double recall = tp / pos;
    ap += (recall - prev_recall) * tp / (tp + fp);
    prev_recall = recall;
  }
  return ap;
}

inline double mae(const std::vector<double> &preds,
                  const std::vector<double> &targets) {
  detail::check_aligned(preds, targets);
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    s += std::abs(preds[i] - targets[i]);
  return s / static_cast<double>(preds.size());
}

inline double rmse(const std::vector<double> &preds,
                   const std::vector<double> &targets) {
  detail::check_aligned(preds, targets);
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    s += (preds[i] - targets[i]) * (preds[i] - targets[i]);
  return std::sqrt(s / static_cast<double>(preds.size()));
}

inline double compute_metric(Metric m, const std::vector<double> &preds,
                             const std::vector<double> &targets) {
  switch (m) {
  case Metric::kRocAuc:
    return roc_auc(preds, targets);
  case Metric::kAp:
    return average_precision(preds, targets);
  case Metric::kMae:
    return mae(preds, targets);
  case Metric::kRmse:
    return rmse(preds, targets);
  }
  return 0.0;
}

}  // namespace moco::pipeline
