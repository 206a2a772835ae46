//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "moco/error.hpp"

namespace moco::nn {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                          Eigen::RowMajor>;

/// Graph node of the reverse-mode tape. The backward closure reads this
/// node's gradient and accumulates into its parents.
struct Node {
  Mat value;
  Mat grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node &)> backward;

  Mat &grad_buffer() {
    if (grad.size() == 0)
      grad = Mat::Zero(value.rows(), value.cols());
    return grad;
  }

  template <class Expr>
  void accumulate(const Expr &g) {
    if (grad.size() == 0)
      grad = g;
    else
      grad += g;
  }
};

namespace detail {

inline bool &grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode(); }

/// Disables tape recording for its lifetime.
class NoGradGuard {
public:
  NoGradGuard(): prev_(detail::grad_mode()) { detail::grad_mode() = false; }
  ~NoGradGuard() { detail::grad_mode() = prev_; }
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard &operator=(const NoGradGuard &) = delete;

private:
  bool prev_;
};

// Shared handle: copies alias the same node, and the mutators change the
// node rather than the handle.
class Tensor {
public:
  Tensor() = default;

  explicit Tensor(Mat value, bool requires_grad = false)
      : node_(std::make_shared<Node>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  static Tensor scalar(double v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return Tensor(std::move(m));
  }

  bool defined() const { return static_cast<bool>(node_); }

  const Mat &value() const { return node_->value; }
  Mat &mutable_value() const { return node_->value; }
  const Mat &grad() const { return node_->grad; }
  Mat &mutable_grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() != 0; }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on) const { node_->requires_grad = on; }

  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }

  double item() const {
    if (node_->value.size() != 1)
      throw ShapeError("item() on a non-scalar tensor");
    return node_->value(0, 0);
  }

  void zero_grad() const { node_->grad.resize(0, 0); }

  Node *node() const { return node_.get(); }
  const std::shared_ptr<Node> &shared() const { return node_; }

  /// Reverse sweep from a scalar. Intermediate gradients are released
  /// once consumed; leaf gradients accumulate across calls.
  void backward() const;

private:
  std::shared_ptr<Node> node_;
};

/// Builds the result node of an op. With recording off, or when no input
/// needs a gradient, the result is a constant.
inline Tensor make_result(Mat value, std::vector<Tensor> inputs,
                          std::function<void(Node &)> backward) {
  Tensor out(std::move(value));
  if (!grad_enabled())
    return out;
  bool any = false;
  for (const Tensor &t: inputs)
    any = any || t.requires_grad();
  if (!any)
    return out;
  Node *n = out.node();
  n->requires_grad = true;
  for (Tensor &t: inputs)
    n->parents.push_back(t.shared());
  n->backward = std::move(backward);
  return out;
}

inline void Tensor::backward() const {
  if (node_->value.size() != 1)
    throw ShapeError("backward() needs a scalar");
  if (!node_->requires_grad)
    return;
  std::vector<Node *> order;
  std::unordered_set<Node *> seen;
  std::vector<std::pair<Node *, std::size_t>> stack { { node_.get(), 0 } };
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto &[n, next] = stack.back();
    if (next < n->parents.size()) {
      Node *p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second)
        stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->accumulate(Mat::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node *n = *it;
    if (!n->backward)
      continue;
    if (n->grad.size() != 0)
      n->backward(*n);
    n->grad.resize(0, 0);
  }
}

}  // namespace moco::nn
