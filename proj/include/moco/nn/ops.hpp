//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "moco/error.hpp"
#include "moco/nn/tensor.hpp"

namespace moco::nn {

namespace detail {

inline Node &parent(Node &n, std::size_t k) { return *n.parents[k]; }

inline bool wants(Node &n, std::size_t k) {
  return n.parents[k]->requires_grad;
}

inline void check_same_shape(const Tensor &a, const Tensor &b,
                             const char *op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
}

}  // namespace detail

// Linear algebra

inline Tensor matmul(const Tensor &a, const Tensor &b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions differ");
  Mat out = a.value() * b.value();
  return make_result(std::move(out), { a, b }, [](Node &n) {
    auto &A = detail::parent(n, 0), &B = detail::parent(n, 1);
    if (A.requires_grad)
      A.accumulate(n.grad * B.value.transpose());
    if (B.requires_grad)
      B.accumulate(A.value.transpose() * n.grad);
  });
}

/// a · bᵀ
inline Tensor matmul_nt(const Tensor &a, const Tensor &b) {
  if (a.cols() != b.cols())
    throw ShapeError("matmul_nt: inner dimensions differ");
  Mat out = a.value() * b.value().transpose();
  return make_result(std::move(out), { a, b }, [](Node &n) {
    auto &A = detail::parent(n, 0), &B = detail::parent(n, 1);
    if (A.requires_grad)
      A.accumulate(n.grad * B.value);
    if (B.requires_grad)
      B.accumulate(n.grad.transpose() * A.value);
  });
}

inline Tensor transpose(const Tensor &a) {
  Mat out = a.value().transpose();
  return make_result(std::move(out), { a }, [](Node &n) {
    detail::parent(n, 0).accumulate(n.grad.transpose());
  });
}

// Elementwise arithmetic

inline Tensor add(const Tensor &a, const Tensor &b) {
  detail::check_same_shape(a, b, "add");
  Mat out = a.value() + b.value();
  return make_result(std::move(out), { a, b }, [](Node &n) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (detail::wants(n, k))
        detail::parent(n, k).accumulate(n.grad);
    }
  });
}

inline Tensor sub(const Tensor &a, const Tensor &b) {
  detail::check_same_shape(a, b, "sub");
  Mat out = a.value() - b.value();
  return make_result(std::move(out), { a, b }, [](Node &n) {
    if (detail::wants(n, 0))
      detail::parent(n, 0).accumulate(n.grad);
    if (detail::wants(n, 1))
      detail::parent(n, 1).accumulate(-n.grad);
  });
}

inline Tensor mul(const Tensor &a, const Tensor &b) {
  detail::check_same_shape(a, b, "mul");
  Mat out = a.value().cwiseProduct(b.value());
  return make_result(std::move(out), { a, b }, [](Node &n) {
    auto &A = detail::parent(n, 0), &B = detail::parent(n, 1);
    if (A.requires_grad)
      A.accumulate(n.grad.cwiseProduct(B.value));
    if (B.requires_grad)
      B.accumulate(n.grad.cwiseProduct(A.value));
  });
}

inline Tensor scale(const Tensor &a, double s) {
  Mat out = a.value() * s;
  return make_result(std::move(out), { a }, [s](Node &n) {
    detail::parent(n, 0).accumulate(n.grad * s);
  });
}

/// a scaled by the single entry of a 1×1 tensor.
inline Tensor scale_by(const Tensor &a, const Tensor &s) {
  if (s.value().size() != 1)
    throw ShapeError("scale_by: scale must be 1x1");
  Mat out = a.value() * s.value()(0, 0);
  return make_result(std::move(out), { a, s }, [](Node &n) {
    auto &A = detail::parent(n, 0), &S = detail::parent(n, 1);
    if (A.requires_grad)
      A.accumulate(n.grad * S.value(0, 0));
    if (S.requires_grad) {
      Mat g(1, 1);
      g(0, 0) = n.grad.cwiseProduct(A.value).sum();
      S.accumulate(g);
    }
  });
}

/// Adds a 1×C row to every row of a.
inline Tensor add_row(const Tensor &a, const Tensor &row) {
  if (row.rows() != 1 || row.cols() != a.cols())
    throw ShapeError("add_row: bias must be 1 x cols");
  Mat out = a.value().rowwise() + row.value().row(0);
  return make_result(std::move(out), { a, row }, [](Node &n) {
    if (detail::wants(n, 0))
      detail::parent(n, 0).accumulate(n.grad);
    if (detail::wants(n, 1))
      detail::parent(n, 1).accumulate(n.grad.colwise().sum());
  });
}

/// Repeats a 1×C row r times.
inline Tensor broadcast_rows(const Tensor &row, Eigen::Index r) {
  if (row.rows() != 1)
    throw ShapeError("broadcast_rows: input must be a row");
  Mat out = row.value().replicate(r, 1);
  return make_result(std::move(out), { row }, [](Node &n) {
    detail::parent(n, 0).accumulate(n.grad.colwise().sum());
  });
}

// Nonlinearities

inline Tensor relu(const Tensor &a) {
  Mat out = a.value().cwiseMax(0.0);
  return make_result(std::move(out), { a }, [](Node &n) {
    auto &A = detail::parent(n, 0);
    A.accumulate((A.value.array() > 0.0).cast<double>().matrix().cwiseProduct(
        n.grad));
  });
}

inline Tensor tanh(const Tensor &a) {
  Mat out = a.value().array().tanh().matrix();
  return make_result(out, { a }, [out](Node &n) {
    detail::parent(n, 0).accumulate(
        ((1.0 - out.array().square()) * n.grad.array()).matrix());
  });
}

// Reductions

inline Tensor sum(const Tensor &a) {
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  return make_result(std::move(out), { a }, [](Node &n) {
    auto &A = detail::parent(n, 0);
    A.accumulate(Mat::Constant(A.value.rows(), A.value.cols(), n.grad(0, 0)));
  });
}

inline Tensor mean(const Tensor &a) {
  if (a.value().size() == 0)
    throw ShapeError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

/// Sum whose result does not depend on the order of the entries: values
/// are added in ascending order.
inline Tensor sum_unordered(const Tensor &a) {
  std::vector<double> v(a.value().data(), a.value().data() + a.value().size());
  std::sort(v.begin(), v.end());
  Mat out(1, 1);
  out(0, 0) = std::accumulate(v.begin(), v.end(), 0.0);
  return make_result(std::move(out), { a }, [](Node &n) {
    auto &A = detail::parent(n, 0);
    A.accumulate(Mat::Constant(A.value.rows(), A.value.cols(), n.grad(0, 0)));
  });
}

inline Tensor mean_unordered(const Tensor &a) {
  if (a.value().size() == 0)
    throw ShapeError("mean of an empty tensor");
  return scale(sum_unordered(a), 1.0 / static_cast<double>(a.value().size()));
}

/// Column sums: R×C → 1×C.
inline Tensor sum_rows(const Tensor &a) {
  Mat out = a.value().colwise().sum();
  return make_result(std::move(out), { a }, [](Node &n) {
    auto &A = detail::parent(n, 0);
    A.accumulate(n.grad.replicate(A.value.rows(), 1));
  });
}

/// Row means: R×C → 1×C.
inline Tensor mean_rows(const Tensor &a) {
  if (a.rows() == 0)
    throw ShapeError("mean_rows of zero rows");
  return scale(sum_rows(a), 1.0 / static_cast<double>(a.rows()));
}

// Layout

inline Tensor concat_cols(const std::vector<Tensor> &parts) {
  Eigen::Index rows = parts.at(0).rows(), cols = 0;
  for (const Tensor &t: parts) {
    if (t.rows() != rows)
      throw ShapeError("concat_cols: row counts differ");
    cols += t.cols();
  }
  Mat out(rows, cols);
  std::vector<Eigen::Index> offs;
  Eigen::Index c = 0;
  for (const Tensor &t: parts) {
    offs.push_back(c);
    out.middleCols(c, t.cols()) = t.value();
    c += t.cols();
  }
  return make_result(std::move(out), parts, [offs](Node &n) {
    for (std::size_t k = 0; k < n.parents.size(); ++k) {
      auto &P = detail::parent(n, k);
      if (P.requires_grad)
        P.accumulate(n.grad.middleCols(offs[k], P.value.cols()));
    }
  });
}

inline Tensor concat_rows(const std::vector<Tensor> &parts) {
  Eigen::Index cols = parts.at(0).cols(), rows = 0;
  for (const Tensor &t: parts) {
    if (t.cols() != cols)
      throw ShapeError("concat_rows: column counts differ");
    rows += t.rows();
  }
  Mat out(rows, cols);
  std::vector<Eigen::Index> offs;
  Eigen::Index r = 0;
  for (const Tensor &t: parts) {
    offs.push_back(r);
    out.middleRows(r, t.rows()) = t.value();
    r += t.rows();
  }
  return make_result(std::move(out), parts, [offs](Node &n) {
    for (std::size_t k = 0; k < n.parents.size(); ++k) {
      auto &P = detail::parent(n, k);
      if (P.requires_grad)
        P.accumulate(n.grad.middleRows(offs[k], P.value.rows()));
    }
  });
}

inline Tensor slice_rows(const Tensor &a, Eigen::Index start,
                         Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    throw ShapeError("slice_rows out of range");
  Mat out = a.value().middleRows(start, count);
  return make_result(std::move(out), { a }, [start, count](Node &n) {
    detail::parent(n, 0).grad_buffer().middleRows(start, count) += n.grad;
  });
}

inline Tensor slice_cols(const Tensor &a, Eigen::Index start,
                         Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw ShapeError("slice_cols out of range");
  Mat out = a.value().middleCols(start, count);
  return make_result(std::move(out), { a }, [start, count](Node &n) {
    detail::parent(n, 0).grad_buffer().middleCols(start, count) += n.grad;
  });
}

/// out[k] = a[index[k]]
inline Tensor gather_rows(const Tensor &a, std::vector<int> index) {
  Mat out(static_cast<Eigen::Index>(index.size()), a.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || index[k] >= a.rows())
      throw ShapeError("gather_rows index out of range");
    out.row(k) = a.value().row(index[k]);
  }
  return make_result(std::move(out), { a }, [index](Node &n) {
    Mat &g = detail::parent(n, 0).grad_buffer();
    for (std::size_t k = 0; k < index.size(); ++k)
      g.row(index[k]) += n.grad.row(k);
  });
}

/// out[index[k]] += a[k], with `rows` output rows.
inline Tensor scatter_add_rows(const Tensor &a, std::vector<int> index,
                               Eigen::Index rows) {
  if (static_cast<Eigen::Index>(index.size()) != a.rows())
    throw ShapeError("scatter_add_rows: one index per row required");
  Mat out = Mat::Zero(rows, a.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || index[k] >= rows)
      throw ShapeError("scatter_add_rows index out of range");
    out.row(index[k]) += a.value().row(k);
  }
  return make_result(std::move(out), { a }, [index](Node &n) {
    auto &A = detail::parent(n, 0);
    Mat g(A.value.rows(), A.value.cols());
    for (std::size_t k = 0; k < index.size(); ++k)
      g.row(k) = n.grad.row(index[k]);
    A.accumulate(g);
  });
}

/// Mean of the rows belonging to each segment; segment[k] names the output
/// row of input row k. Every segment must be non-empty.
inline Tensor segment_mean(const Tensor &a, const std::vector<int> &segment,
                           Eigen::Index segments) {
  std::vector<double> count(segments, 0.0);
  for (int s: segment)
    count.at(s) += 1.0;
  Mat w(a.rows(), 1);
  for (std::size_t k = 0; k < segment.size(); ++k) {
    if (count[segment[k]] == 0.0)
      throw ShapeError("segment_mean: empty segment");
    w(k, 0) = 1.0 / count[segment[k]];
  }
  Mat out = Mat::Zero(segments, a.cols());
  for (std::size_t k = 0; k < segment.size(); ++k)
    out.row(segment[k]) += a.value().row(k) * w(k, 0);
  return make_result(std::move(out), { a }, [segment, w](Node &n) {
    auto &A = detail::parent(n, 0);
    Mat g(A.value.rows(), A.value.cols());
    for (std::size_t k = 0; k < segment.size(); ++k)
      g.row(k) = n.grad.row(segment[k]) * w(k, 0);
    A.accumulate(g);
  });
}

/// Elementwise maximum over equally shaped tensors; the gradient goes to
/// the first argument attaining the maximum.
inline Tensor max_elementwise(const std::vector<Tensor> &parts) {
  for (const Tensor &t: parts)
    detail::check_same_shape(t, parts.at(0), "max_elementwise");
  const Eigen::Index r = parts[0].rows(), c = parts[0].cols();
  Mat out = parts[0].value();
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> arg =
      Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(
          r, c);
  for (std::size_t k = 1; k < parts.size(); ++k) {
    const Mat &v = parts[k].value();
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) {
        if (v(i, j) > out(i, j)) {
          out(i, j) = v(i, j);
          arg(i, j) = static_cast<int>(k);
        }
      }
    }
  }
  return make_result(std::move(out), parts, [arg](Node &n) {
    for (std::size_t k = 0; k < n.parents.size(); ++k) {
      auto &P = detail::parent(n, k);
      if (!P.requires_grad)
        continue;
      P.accumulate(
          (arg.array() == static_cast<int>(k)).cast<double>().matrix().cwiseProduct(
              n.grad));
    }
  });
}

// Normalization and probabilities

/// Rows scaled to unit ℓ2 norm. A zero row is an error; non-finite rows
/// pass through as NaN.
inline Tensor l2_normalize_rows(const Tensor &a) {
  Eigen::VectorXd norms = a.value().rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    if (norms(i) == 0.0)
      throw ZeroProjection("cannot normalize a zero vector (row " +
                           std::to_string(i) + ")");
  }
  Mat out = norms.cwiseInverse().asDiagonal() * a.value();
  return make_result(out, { a }, [out, norms](Node &n) {
    // d x = (g - y (y·g)) / |x|
    Eigen::VectorXd dots = out.cwiseProduct(n.grad).rowwise().sum();
    Mat g = n.grad - dots.asDiagonal() * out;
    detail::parent(n, 0).accumulate(norms.cwiseInverse().asDiagonal() * g);
  });
}

inline Mat log_softmax_rows_value(const Mat &x) {
  Mat out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    const double lse = m + std::log((x.row(i).array() - m).exp().sum());
    out.row(i) = x.row(i).array() - lse;
  }
  return out;
}

inline Tensor log_softmax_rows(const Tensor &a) {
  Mat out = log_softmax_rows_value(a.value());
  return make_result(out, { a }, [out](Node &n) {
    Mat p = out.array().exp().matrix();
    Eigen::VectorXd gs = n.grad.rowwise().sum();
    detail::parent(n, 0).accumulate(n.grad - gs.asDiagonal() * p);
  });
}

inline Tensor softmax_rows(const Tensor &a) {
  Mat out = log_softmax_rows_value(a.value()).array().exp().matrix();
  return make_result(out, { a }, [out](Node &n) {
    Eigen::VectorXd dots = out.cwiseProduct(n.grad).rowwise().sum();
    detail::parent(n, 0).accumulate(
        out.cwiseProduct(n.grad) - dots.asDiagonal() * out);
  });
}

/// Row-wise layer normalization with learned 1×C gain and bias.
inline Tensor layer_norm(const Tensor &x, const Tensor &gain,
                         const Tensor &bias, double eps = 1e-5) {
  const Eigen::Index r = x.rows(), c = x.cols();
  if (gain.cols() != c || bias.cols() != c)
    throw ShapeError("layer_norm: parameter width differs from input");
  Mat xhat(r, c);
  Eigen::VectorXd inv_std(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const double mu = x.value().row(i).mean();
    const double var =
        (x.value().row(i).array() - mu).square().sum() / static_cast<double>(c);
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (x.value().row(i).array() - mu) * inv_std(i);
  }
  Mat out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);
  return make_result(std::move(out), { x, gain, bias },
                     [xhat, inv_std](Node &n) {
    auto &X = detail::parent(n, 0), &G = detail::parent(n, 1),
         &B = detail::parent(n, 2);
    if (G.requires_grad)
      G.accumulate(n.grad.cwiseProduct(xhat).colwise().sum());
    if (B.requires_grad)
      B.accumulate(n.grad.colwise().sum());
    if (X.requires_grad) {
      const double c = static_cast<double>(xhat.cols());
      Mat gx = (n.grad.array().rowwise() * G.value.row(0).array()).matrix();
      Mat dx(gx.rows(), gx.cols());
      for (Eigen::Index i = 0; i < gx.rows(); ++i) {
        const double m1 = gx.row(i).sum() / c;
        const double m2 = gx.row(i).dot(xhat.row(i)) / c;
        dx.row(i) =
            (gx.row(i).array() - m1 - xhat.row(i).array() * m2) * inv_std(i);
      }
      X.accumulate(dx);
    }
  });
}

// Losses

namespace detail {

// Unlabelled entries may hold NaN; zero them so masking is exact.
inline Mat masked_copy(const Mat &targets, const Mat &mask) {
  return (mask.array() != 0.0).select(targets, 0.0);
}

}  // namespace detail

/// Picks out[k] = a(rows[k], cols[k]) as a K×1 column.
inline Tensor select_entries(const Tensor &a, std::vector<int> rows,
                             std::vector<int> cols) {
  if (rows.size() != cols.size())
    throw ShapeError("select_entries: index lists differ in length");
  Mat out(static_cast<Eigen::Index>(rows.size()), 1);
  for (std::size_t k = 0; k < rows.size(); ++k)
    out(k, 0) = a.value()(rows[k], cols[k]);
  return make_result(std::move(out), { a }, [rows, cols](Node &n) {
    Mat &g = detail::parent(n, 0).grad_buffer();
    for (std::size_t k = 0; k < rows.size(); ++k)
      g(rows[k], cols[k]) += n.grad(k, 0);
  });
}

/// Mean negative log-likelihood of integer targets under row softmax.
inline Tensor cross_entropy(const Tensor &logits,
                            const std::vector<int> &targets) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows())
    throw ShapeError("cross_entropy: one target per row required");
  std::vector<int> rows(targets.size());
  for (std::size_t k = 0; k < rows.size(); ++k)
    rows[k] = static_cast<int>(k);
  return scale(sum(select_entries(log_softmax_rows(logits), rows, targets)),
               -1.0 / static_cast<double>(targets.size()));
}

/// Binary cross-entropy on logits, averaged over entries whose mask is
/// nonzero.
inline Tensor bce_with_logits(const Tensor &logits, const Mat &raw_targets,
                              const Mat &mask) {
  if (raw_targets.rows() != logits.rows() ||
      raw_targets.cols() != logits.cols() || mask.rows() != logits.rows() ||
      mask.cols() != logits.cols())
    throw ShapeError("bce_with_logits: shape mismatch");
  const Mat targets = detail::masked_copy(raw_targets, mask);
  const double count = mask.sum();
  if (!(count > 0.0))
    throw ShapeError("bce_with_logits: no labelled entries");
  const Mat &x = logits.value();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (mask(i, j) == 0.0)
        continue;
      const double v = x(i, j);
      loss += std::max(v, 0.0) - v * targets(i, j) +
              std::log1p(std::exp(-std::abs(v)));
    }
  }
  Mat out(1, 1);
  out(0, 0) = loss / count;
  return make_result(std::move(out), { logits },
                     [targets, mask, count](Node &n) {
    auto &X = detail::parent(n, 0);
    Mat sig = (1.0 / (1.0 + (-X.value.array()).exp())).matrix();
    X.accumulate(((sig - targets).cwiseProduct(mask)) * (n.grad(0, 0) / count));
  });
}

/// Squared error averaged over entries whose mask is nonzero.
inline Tensor masked_mse(const Tensor &pred, const Mat &raw_targets,
                         const Mat &mask) {
  if (raw_targets.rows() != pred.rows() || raw_targets.cols() != pred.cols() ||
      mask.rows() != pred.rows() || mask.cols() != pred.cols())
    throw ShapeError("masked_mse: shape mismatch");
  const Mat targets = detail::masked_copy(raw_targets, mask);
  const double count = mask.sum();
  if (!(count > 0.0))
    throw ShapeError("masked_mse: no labelled entries");
  Mat diff = (pred.value() - targets).cwiseProduct(mask);
  Mat out(1, 1);
  out(0, 0) = diff.squaredNorm() / count;
  return make_result(std::move(out), { pred }, [diff, count](Node &n) {
    detail::parent(n, 0).accumulate(diff * (2.0 * n.grad(0, 0) / count));
  });
}

}  // namespace moco::nn
