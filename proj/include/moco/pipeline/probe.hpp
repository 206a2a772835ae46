//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "moco/chem.hpp"
#include "moco/encoders/config.hpp"
#include "moco/error.hpp"
#include "moco/pipeline/dataset.hpp"
#include "moco/pipeline/finetune.hpp"
#include "moco/pipeline/metrics.hpp"
#include "moco/pipeline/split.hpp"

namespace moco::pipeline {

using nn::Mat;

/// Per-column standardization fitted on training rows. Constant columns
/// keep unit scale.
struct Standardizer {
  Eigen::RowVectorXd mean, scale;

  explicit Standardizer(const Mat &x) {
    mean = x.colwise().mean();
    scale = ((x.rowwise() - mean).array().square().colwise().mean()).sqrt();
    for (Eigen::Index j = 0; j < scale.size(); ++j) {
      if (!(scale(j) > 1e-12))
        scale(j) = 1.0;
    }
  }

  Mat operator()(const Mat &x) const {
    return (x.rowwise() - mean).array().rowwise() / scale.array();
  }
};

/// y ≈ x·w + c; the intercept is not penalized.
struct LinearModel {
  Eigen::VectorXd w;
  double c = 0.0;

  Eigen::VectorXd operator()(const Mat &x) const {
    return (x * w).array() + c;
  }
};

inline LinearModel ridge_fit(const Mat &x, const Eigen::VectorXd &y,
                             double lambda) {
  if (x.rows() != y.size() || x.rows() == 0)
    throw ShapeError("ridge: need one target per row");
  const Eigen::RowVectorXd mx = x.colwise().mean();
  const double my = y.mean();
  const Mat xc = x.rowwise() - mx;
  Mat a = xc.transpose() * xc;
  a.diagonal().array() += lambda;
  LinearModel m;
  m.w = a.ldlt().solve(xc.transpose() * (y.array() - my).matrix());
  m.c = my - mx.dot(m.w);
  return m;
}

/// L2-penalized logistic regression by Newton iterations (IRLS).
/// Returns the linear score; the probability is its logistic.
inline LinearModel logistic_fit(const Mat &x, const Eigen::VectorXd &y,
                                double lambda, int max_iter = 100,
                                double tol = 1e-10) {
  if (x.rows() != y.size() || x.rows() == 0)
    throw ShapeError("logistic: need one target per row");
  const Eigen::Index n = x.rows(), d = x.cols();
  Mat xa(n, d + 1);
  xa << x, Eigen::VectorXd::Ones(n);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd z = xa * beta;
    const Eigen::VectorXd p =
        z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    const Eigen::VectorXd wts = (p.array() * (1.0 - p.array())).max(1e-12);
    Eigen::VectorXd grad = xa.transpose() * (p - y);
    grad.head(d) += lambda * beta.head(d);
    Mat h = xa.transpose() * wts.asDiagonal() * xa;
    h.diagonal().head(d).array() += lambda;
    h(d, d) += 1e-9;
    const Eigen::VectorXd step = h.ldlt().solve(grad);
    beta -= step;
    if (step.lpNorm<Eigen::Infinity>() < tol)
      break;
  }
  LinearModel m;
  m.w = beta.head(d);
  m.c = beta(d);
  return m;
}

inline std::vector<double> to_vector(const Eigen::VectorXd &v) {
  return { v.data(), v.data() + v.size() };
}

inline Mat rows_of(const Mat &x, const std::vector<int> &idx) {
  Mat out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
  return out;
}

inline Eigen::VectorXd entries_of(const std::vector<double> &v,
                                  const std::vector<int> &idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = v[idx[i]];
  return out;
}

struct ProbeConfig {
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  double ridge_lambda = 1.0;
  double logistic_lambda = 1.0;
};

struct ProbeSplit {
  std::vector<int> train, test;
};

inline ProbeSplit probe_split(std::size_t n, const ProbeConfig &cfg) {
  const DatasetSplit s =
      random_split(n, cfg.seed, SplitRatios { cfg.train_fraction, 0.0 });
  return { s.train, s.test };
}

/// Average precision of a logistic probe on standardized embeddings.
/// When the training labels hold one class the probe is constant and the
/// score equals the positive rate of the test labels.
inline double chirality_probe_ap(const Mat &emb, const std::vector<double> &labels,
                                 const ProbeConfig &cfg) {
  if (emb.rows() != static_cast<Eigen::Index>(labels.size()))
    throw ShapeError("probe: one label per embedding row required");
  const ProbeSplit sp = probe_split(labels.size(), cfg);
  if (sp.train.empty() || sp.test.empty())
    throw EmptyBatch("probe: too few molecules to split");
  const Eigen::VectorXd ytr = entries_of(labels, sp.train);
  const Eigen::VectorXd yte = entries_of(labels, sp.test);
  if (ytr.minCoeff() == ytr.maxCoeff() || yte.minCoeff() == yte.maxCoeff())
    return yte.mean();
  const Standardizer st(rows_of(emb, sp.train));
  const LinearModel m =
      logistic_fit(st(rows_of(emb, sp.train)), ytr, cfg.logistic_lambda);
  return average_precision(to_vector(m(st(rows_of(emb, sp.test)))), to_vector(yte));
}

struct RegressionProbe {
  double mae = 0.0;
  double baseline_mae = 0.0;  // constant prediction at the training mean
};

inline RegressionProbe regression_probe(const Mat &emb,
                                        const std::vector<double> &targets,
                                        const ProbeConfig &cfg) {
  if (emb.rows() != static_cast<Eigen::Index>(targets.size()))
    throw ShapeError("probe: one target per embedding row required");
  const ProbeSplit sp = probe_split(targets.size(), cfg);
  if (sp.train.empty() || sp.test.empty())
    throw EmptyBatch("probe: too few molecules to split");
  const Eigen::VectorXd ytr = entries_of(targets, sp.train);
  const Eigen::VectorXd yte = entries_of(targets, sp.test);
  const Standardizer st(rows_of(emb, sp.train));
  const LinearModel m = ridge_fit(st(rows_of(emb, sp.train)), ytr, cfg.ridge_lambda);
  RegressionProbe r;
  r.mae = mae(to_vector(m(st(rows_of(emb, sp.test)))), to_vector(yte));
  r.baseline_mae =
      mae(std::vector<double>(sp.test.size(), ytr.mean()), to_vector(yte));
  return r;
}

/// Reference values of the two probes at large pretraining scale, printed
/// next to local results for comparison only.
struct ProbeReference {
  encoders::View view;
  double chirality_ap;
  double rings_mae;
};

inline constexpr std::array<ProbeReference, 4> kProbeReference { {
    { encoders::View::k2D, 0.4952, 0.1949 },
    { encoders::View::k3D, 0.4959, 0.2021 },
    { encoders::View::kSM, 0.5505, 0.3077 },
    { encoders::View::kFP, 0.5246, 0.2590 },
} };

inline const ProbeReference &probe_reference(encoders::View v) {
  for (const ProbeReference &r: kProbeReference) {
    if (r.view == v)
      return r;
  }
  throw Error("no probe reference for view");
}

struct CaseStudyRow {
  std::string task;  // "chirality" or "rings"
  encoders::View view;
  std::string metric;
  double value;
  double baseline;  // NaN when not applicable
  double reference;
};

/// Frozen per-view embeddings probed for R/S labels (AP) and aromatic
/// ring counts (MAE). Either set of molecules may be empty.
inline std::vector<CaseStudyRow>
case_study(const MultiViewModel &model, const std::vector<Molecule> &chiral,
           const std::vector<Molecule> &rings, const ProbeConfig &cfg) {
  std::vector<CaseStudyRow> rows;
  auto all = [](std::size_t n) {
    std::vector<int> v(n);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = static_cast<int>(i);
    return v;
  };
  if (!chiral.empty()) {
    const fusion::ViewSet vs = embed_molecules(model, chiral, all(chiral.size()));
    std::vector<double> labels;
    for (const Molecule &m: chiral) {
      if (m.labels.empty())
        throw DataError("chirality probe needs a label column");
      labels.push_back(m.labels.front());
    }
    for (std::size_t k = 0; k < vs.size(); ++k)
      rows.push_back({ "chirality", vs.views[k], "ap",
                       chirality_probe_ap(vs.embeddings[k].value(), labels, cfg),
                       std::nan(""), probe_reference(vs.views[k]).chirality_ap });
  }
  if (!rings.empty()) {
    const fusion::ViewSet vs = embed_molecules(model, rings, all(rings.size()));
    std::vector<double> counts;
    for (const Molecule &m: rings)
      counts.push_back(chem::count_aromatic_rings(m.graph));
    for (std::size_t k = 0; k < vs.size(); ++k) {
      const RegressionProbe r = regression_probe(vs.embeddings[k].value(), counts, cfg);
      rows.push_back({ "rings", vs.views[k], "mae", r.mae, r.baseline_mae,
                       probe_reference(vs.views[k]).rings_mae });
    }
  }
  return rows;
}

inline void write_case_study_csv(std::ostream &os,
                                 const std::vector<CaseStudyRow> &rows) {
  os << "task,view,metric,value,baseline,reference\n";
  for (const CaseStudyRow &r: rows)
    os << r.task << ',' << encoders::view_name(r.view) << ',' << r.metric << ','
       << format_double(r.value) << ','
       << (std::isnan(r.baseline) ? std::string() : format_double(r.baseline))
       << ',' << format_double(r.reference) << '\n';
}

}  // namespace moco::pipeline
