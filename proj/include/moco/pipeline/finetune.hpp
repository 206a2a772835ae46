//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "moco/encoders.hpp"
#include "moco/nn.hpp"
#include "moco/pipeline/dataset.hpp"
#include "moco/pipeline/metrics.hpp"
#include "moco/pipeline/model.hpp"
#include "moco/pipeline/pretrain.hpp"
#include "moco/pipeline/split.hpp"

namespace moco::pipeline {

/// Embeddings of the given molecules (first frame each) for every active
/// view, computed batch by batch without dropout or gradient.
inline fusion::ViewSet embed_molecules(const MultiViewModel &model,
                                       const std::vector<Molecule> &mols,
                                       const std::vector<int> &indices,
                                       int batch_size = 64) {
  nn::NoGradGuard no_grad;
  std::vector<std::vector<Tensor>> parts(model.mask().active().size());
  fusion::ViewSet out;
  out.views = model.mask().active();
  for (std::size_t start = 0; start < indices.size();
       start += static_cast<std::size_t>(batch_size)) {
    std::vector<const featurize::MolViews *> batch;
    for (std::size_t k = start;
         k < std::min(indices.size(), start + static_cast<std::size_t>(batch_size));
         ++k)
      batch.push_back(&mols[indices[k]].frames.front());
    const fusion::ViewSet vs = model.embed(encoders::make_graph_batch(batch));
    for (std::size_t m = 0; m < vs.size(); ++m)
      parts[m].push_back(vs.embeddings[m]);
  }
  for (auto &p: parts)
    out.embeddings.push_back(nn::concat_rows(p));
  return out;
}

/// Label matrix (molecules × tasks) of the given molecules; NaN = missing.
inline nn::Mat label_matrix(const std::vector<Molecule> &mols,
                            const std::vector<int> &indices) {
  const Eigen::Index tasks =
      indices.empty() ? 0 : static_cast<Eigen::Index>(mols[indices[0]].labels.size());
  nn::Mat y(static_cast<Eigen::Index>(indices.size()), tasks);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::vector<double> &l = mols[indices[i]].labels;
    if (static_cast<Eigen::Index>(l.size()) != tasks)
      throw DataError("molecules disagree on the number of labels");
    for (Eigen::Index t = 0; t < tasks; ++t)
      y(static_cast<Eigen::Index>(i), t) = l[t];
  }
  return y;
}

inline nn::Mat observed_mask(const nn::Mat &y) {
  return y.unaryExpr([](double v) { return std::isnan(v) ? 0.0 : 1.0; });
}

/// Mean over tasks of one metric. Tasks without labels, or with a single
/// class for a ranking metric, are left out; throws SingleClass when none
/// remain.
inline double task_mean_metric(Metric metric, const nn::Mat &preds,
                               const nn::Mat &targets) {
  double sum = 0.0;
  int used = 0;
  for (Eigen::Index t = 0; t < targets.cols(); ++t) {
    std::vector<double> p, y;
    for (Eigen::Index i = 0; i < targets.rows(); ++i) {
      if (!std::isnan(targets(i, t))) {
        p.push_back(preds(i, t));
        y.push_back(targets(i, t));
      }
    }
    if (y.empty())
      continue;
    try {
      sum += compute_metric(metric, p, y);
      ++used;
    } catch (const SingleClass &) {
    }
  }
  if (used == 0)
    throw SingleClass(std::string(metric_name(metric)) +
                      ": no task has both classes in this subset");
  return sum / used;
}

struct FinetuneConfig {
  TaskKind task = TaskKind::kClassify;
  int epochs = 30;
  int batch_size = 32;
  std::vector<std::uint64_t> seeds { 0, 1, 2 };
  double lr = 1e-4;
  double head_lr = 1e-3;
  std::map<std::string, double> group_lr;
  ViewMask views;
  fusion::FusionMode fusion = fusion::FusionMode::kAttention;
  bool freeze_fusion = false;
  SplitMethod split = SplitMethod::kScaffold;
  std::optional<Metric> selection;  // default: roc_auc or rmse by task

  Metric selection_metric() const {
    if (selection)
      return *selection;
    return task == TaskKind::kClassify ? Metric::kRocAuc : Metric::kRmse;
  }

  std::vector<Metric> reported() const {
    if (task == TaskKind::kClassify)
      return { Metric::kRocAuc, Metric::kAp };
    return { Metric::kMae, Metric::kRmse };
  }
};

/// Model plus the linear prediction head on the fused embedding.
struct Predictor {
  MultiViewModel model;
  nn::Linear head;

  Predictor(const encoders::ModelConfig &mc, std::uint64_t seed, int tasks,
            const FinetuneConfig &cfg)
      : model(mc, seed, cfg.views, cfg.fusion) {
    Rng rng(seed, "head");
    head = nn::Linear(mc.dim, tasks, rng);
  }

  nn::ParamList trainable() const {
    nn::ParamList ps = model.params(false);
    head.collect(ps, "head", "head");
    return ps;
  }

  nn::ParamList all_params() const {
    nn::ParamList ps = model.all_params();
    head.collect(ps, "head", "head");
    return ps;
  }

  /// Head outputs (logits or values) over the given molecules. Attention
  /// weights are computed once over this whole set.
  nn::Mat predict(const std::vector<Molecule> &mols,
                  const std::vector<int> &indices, int batch_size = 64) {
    if (indices.empty())
      return nn::Mat(0, head.out_features());
    const fusion::ViewSet vs = embed_molecules(model, mols, indices, batch_size);
    nn::NoGradGuard no_grad;
    model.fusion().cache_alpha(vs);
    const nn::Mat out = head(model.fuse(vs)).value();
    model.fusion().clear_cached_alpha();
    return out;
  }
};

struct SeedResult {
  std::uint64_t seed = 0;
  DatasetSplit split;
  int best_epoch = 0;  // 0: the starting model
  std::map<Metric, double> valid, test;
  nn::Mat test_predictions;
  std::vector<double> train_loss;
};

struct MetricsReport {
  TaskKind task = TaskKind::kClassify;
  std::vector<SeedResult> seeds;

  /// Mean and sample standard deviation of a test metric over seeds.
  std::pair<double, double> summary(Metric m) const {
    std::vector<double> v;
    for (const SeedResult &s: seeds) {
      auto it = s.test.find(m);
      if (it != s.test.end())
        v.push_back(it->second);
    }
    if (v.empty())
      return { std::nan(""), std::nan("") };
    double mean = 0.0;
    for (double x: v)
      mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x: v)
      var += (x - mean) * (x - mean);
    const double sd =
        v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    return { mean, sd };
  }
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Deterministic CSV: seed,subset,metric,value rows, then mean and std.
inline void write_metrics_csv(std::ostream &os, const MetricsReport &r,
                              const std::vector<Metric> &metrics) {
  os << "seed,subset,metric,value\n";
  for (const SeedResult &s: r.seeds) {
    for (const auto &[subset, values]:
         { std::pair { "valid", &s.valid }, std::pair { "test", &s.test } }) {
      for (Metric m: metrics) {
        auto it = values->find(m);
        if (it != values->end())
          os << s.seed << ',' << subset << ',' << metric_name(m) << ','
             << format_double(it->second) << '\n';
      }
    }
  }
  for (Metric m: metrics) {
    const auto [mean, sd] = r.summary(m);
    os << "mean,test," << metric_name(m) << ',' << format_double(mean) << '\n';
    os << "std,test," << metric_name(m) << ',' << format_double(sd) << '\n';
  }
}

inline void write_metrics_text(std::ostream &os, const MetricsReport &r,
                               const std::vector<Metric> &metrics) {
  char buf[128];
  for (Metric m: metrics) {
    const auto [mean, sd] = r.summary(m);
    std::snprintf(buf, sizeof buf, "%-8s %.4f +/- %.4f over %zu seed(s)\n",
                  std::string(metric_name(m)).c_str(), mean, sd, r.seeds.size());
    os << buf;
  }
}

inline nn::Tensor task_loss(TaskKind task, const nn::Tensor &out,
                            const nn::Mat &y) {
  const nn::Mat mask = observed_mask(y);
  return task == TaskKind::kClassify ? nn::bce_with_logits(out, y, mask)
                                     : nn::masked_mse(out, y, mask);
}

inline nn::Checkpoint predictor_checkpoint(const Predictor &p) {
  nn::Checkpoint c =
      nn::make_checkpoint(p.all_params(), p.model.config().arch_hash());
  c.meta["views"] = p.model.mask().str();
  c.meta["tasks"] = std::to_string(p.head.out_features());
  return c;
}

inline std::map<Metric, double> evaluate(Predictor &p,
                                         const std::vector<Molecule> &mols,
                                         const std::vector<int> &indices,
                                         const std::vector<Metric> &metrics) {
  std::map<Metric, double> out;
  if (indices.empty())
    return out;
  const nn::Mat pred = p.predict(mols, indices);
  const nn::Mat y = label_matrix(mols, indices);
  for (Metric m: metrics) {
    try {
      out[m] = task_mean_metric(m, pred, y);
    } catch (const SingleClass &) {
    }
  }
  return out;
}

inline DatasetSplit make_split(const std::vector<Molecule> &mols,
                               SplitMethod method, std::uint64_t seed) {
  return method == SplitMethod::kScaffold
             ? scaffold_split(scaffold_keys(mols), seed)
             : random_split(mols.size(), seed);
}

/// Trains one seed on the train subset, keeps the epoch with the best
/// validation score and reports valid and test metrics for it.
inline SeedResult finetune_seed(Predictor &p, const std::vector<Molecule> &mols,
                                const DatasetSplit &split,
                                const FinetuneConfig &cfg, std::uint64_t seed) {
  SeedResult res;
  res.seed = seed;
  res.split = split;
  if (cfg.freeze_fusion)
    p.model.fusion().set_frozen(true);
  const Metric sel = cfg.selection_metric();
  std::vector<Metric> tracked = cfg.reported();
  if (std::find(tracked.begin(), tracked.end(), sel) == tracked.end())
    tracked.push_back(sel);

  const nn::ParamList trainable = p.trainable();
  const nn::ParamList all = p.all_params();
  std::map<std::string, double> lrs = cfg.group_lr;
  lrs.emplace("head", cfg.head_lr);
  nn::Adam opt(trainable, lrs, cfg.lr);
  Rng order_rng(seed, "finetune.order");
  Rng frame_rng(seed, "finetune.conformer");
  Rng drop_rng(seed, "finetune.dropout");
  const encoders::ForwardMode train { true, &drop_rng };

  std::vector<nn::Mat> best = nn::snapshot(all);
  double best_score = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> order = split.train;
  for (int epoch = 1; epoch <= cfg.epochs && !order.empty(); ++epoch) {
    const std::vector<const featurize::MolViews *> frames =
        sample_frames(mols, frame_rng);
    order_rng.shuffle(order);
    double total = 0.0;
    int batch_id = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size), ++batch_id) {
      std::vector<const featurize::MolViews *> batch;
      std::vector<int> idx;
      for (std::size_t k = start;
           k < std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
           ++k) {
        batch.push_back(frames[order[k]]);
        idx.push_back(order[k]);
      }
      opt.zero_grad();
      const fusion::ViewSet vs =
          p.model.embed(encoders::make_graph_batch(batch), train);
      const nn::Tensor loss =
          task_loss(cfg.task, p.head(p.model.fuse(vs)), label_matrix(mols, idx));
      const double l = loss.item();
      if (!std::isfinite(l))
        throw TrainingDiverged(divergence_report(trainable, epoch, batch_id, l));
      loss.backward();
      opt.step();
      total += l * static_cast<double>(batch.size());
    }
    opt.zero_grad();
    res.train_loss.push_back(total / static_cast<double>(order.size()));

    double score = std::numeric_limits<double>::quiet_NaN();
    const auto valid = evaluate(p, mols, split.valid, { sel });
    if (auto it = valid.find(sel); it != valid.end())
      score = it->second;
    // Without a usable validation score the latest epoch is kept.
    const bool better =
        std::isnan(score) || std::isnan(best_score) ||
        (higher_is_better(sel) ? score > best_score : score < best_score);
    if (better) {
      best_score = score;
      best = nn::snapshot(all);
      res.best_epoch = epoch;
    }
  }
  nn::restore(all, best);
  res.valid = evaluate(p, mols, split.valid, tracked);
  res.test = evaluate(p, mols, split.test, tracked);
  res.test_predictions = p.predict(mols, split.test);
  return res;
}

/// Runs every configured seed, each from the same starting checkpoint
/// when one is given, and collects the test metrics.
inline MetricsReport finetune(
    const encoders::ModelConfig &mc, const nn::Checkpoint *start,
    const std::vector<Molecule> &mols, const FinetuneConfig &cfg,
    const std::function<void(const Predictor &, const SeedResult &)> &on_seed = {}) {
  if (mols.empty())
    throw EmptyBatch("fine-tuning needs at least one molecule");
  const int tasks = static_cast<int>(mols.front().labels.size());
  if (tasks == 0)
    throw DataError("fine-tuning needs at least one label column");
  MetricsReport report;
  report.task = cfg.task;
  for (std::uint64_t seed: cfg.seeds) {
    Predictor p(mc, seed, tasks, cfg);
    if (start)
      load_model(p.model, *start);
    const DatasetSplit split = make_split(mols, cfg.split, seed);
    report.seeds.push_back(finetune_seed(p, mols, split, cfg, seed));
    if (on_seed)
      on_seed(p, report.seeds.back());
  }
  return report;
}

}  // namespace moco::pipeline
