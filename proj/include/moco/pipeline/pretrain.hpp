//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "moco/encoders.hpp"
#include "moco/nn.hpp"
#include "moco/objective.hpp"
#include "moco/pipeline/dataset.hpp"
#include "moco/pipeline/model.hpp"

namespace moco::pipeline {

struct PretrainConfig {
  int epochs = 100;
  int batch_size = 256;
  double tau = 0.1;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  std::map<std::string, double> group_lr;  // optimizer group → rate
  bool run_mlm = true;                     // train the string backbone first
  encoders::MlmConfig mlm;
};

struct TrainLogRow {
  int epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  double wall_ms = 0.0;
};

inline void write_train_log_header(std::ostream &os) {
  os << "epoch,loss,lr,wall_ms\n";
}

inline void write_train_log_row(std::ostream &os, const TrainLogRow &r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.3f\n", r.epoch, r.loss, r.lr,
                r.wall_ms);
  os << buf;
}

struct PretrainResult {
  std::vector<double> epoch_loss;
  std::vector<TrainLogRow> log;
  encoders::MlmResult mlm;
};

/// Pointers to one conformer frame per molecule; each frame is drawn
/// uniformly, one draw per molecule per call.
inline std::vector<const featurize::MolViews *>
sample_frames(const std::vector<Molecule> &mols, Rng &rng) {
  std::vector<const featurize::MolViews *> out;
  out.reserve(mols.size());
  for (const Molecule &m: mols)
    out.push_back(&m.frames[rng.below(m.frames.size())]);
  return out;
}

/// Molecules the model cannot embed, with reasons; the rest are kept.
inline std::vector<SkippedRecord> drop_unusable(const MultiViewModel &model,
                                                std::vector<Molecule> &mols) {
  std::vector<SkippedRecord> dropped;
  std::vector<Molecule> kept;
  const int max_len = model.config().sm.max_len;
  for (Molecule &m: mols) {
    if (model.needs_positions() && !m.frames.front().has_positions())
      dropped.push_back({ m.row, "no conformer for the 3d view" });
    else if (model.mask()[View::kSM] &&
             static_cast<int>(m.frames.front().tokens.size()) > max_len)
      dropped.push_back({ m.row, "token sequence longer than " +
                                     std::to_string(max_len) });
    else if (m.graph.num_atoms() == 0)
      dropped.push_back({ m.row, "empty molecule" });
    else
      kept.push_back(std::move(m));
  }
  mols = std::move(kept);
  return dropped;
}

inline std::string divergence_report(const nn::ParamList &params, int epoch,
                                     int batch, double loss) {
  std::ostringstream os;
  os << "training diverged: loss " << loss << " at epoch " << epoch
     << ", batch " << batch << "; parameter norm "
     << std::sqrt(nn::squared_norm(params));
  for (const nn::NamedParam &p: params) {
    if (!p.tensor.value().allFinite())
      os << "; non-finite " << p.name;
  }
  return os.str();
}

/// Contrastive pretraining of every active encoder with fusion and critic.
/// The string backbone is first trained by masked-token prediction when
/// configured. Epoch loss is the molecule-weighted mean of batch losses.
inline PretrainResult pretrain(MultiViewModel &model,
                               const std::vector<Molecule> &mols,
                               const PretrainConfig &cfg,
                               const std::function<void(const TrainLogRow &)>
                                   &on_epoch = {}) {
  if (mols.empty())
    throw EmptyBatch("pretraining needs at least one molecule");
  if (cfg.batch_size < 1)
    throw ConfigError("batch size must be positive");
  PretrainResult res;

  if (cfg.run_mlm && model.smiles()) {
    std::vector<std::vector<int>> corpus;
    for (const Molecule &m: mols)
      corpus.push_back(m.frames.front().tokens);
    encoders::MlmConfig mc = cfg.mlm;
    mc.seed = cfg.seed;
    res.mlm = encoders::mlm_pretrain(model.smiles()->backbone(), corpus, mc);
    if (res.mlm.diverged)
      throw TrainingDiverged("masked-token pretraining produced a non-finite loss");
  }

  const nn::ParamList params = model.params();
  nn::Adam opt(params, cfg.group_lr, cfg.lr);
  Rng order_rng(cfg.seed, "pretrain.order");
  Rng frame_rng(cfg.seed, "pretrain.conformer");
  Rng drop_rng(cfg.seed, "pretrain.dropout");
  const encoders::ForwardMode train { true, &drop_rng };

  std::vector<int> order(mols.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<const featurize::MolViews *> frames =
        sample_frames(mols, frame_rng);
    order_rng.shuffle(order);
    double total = 0.0;
    int batch_id = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size), ++batch_id) {
      std::vector<const featurize::MolViews *> batch;
      for (std::size_t k = start;
           k < std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
           ++k)
        batch.push_back(frames[order[k]]);
      opt.zero_grad();
      const encoders::GraphBatch gb = encoders::make_graph_batch(batch);
      const fusion::ViewSet vs = model.embed(gb, train);
      const Tensor loss =
          objective::infonce_loss(vs, model.fuse(vs), model.critic(), cfg.tau);
      const double l = loss.item();
      if (!std::isfinite(l))
        throw TrainingDiverged(divergence_report(params, epoch, batch_id, l));
      loss.backward();
      opt.step();
      total += l * static_cast<double>(batch.size());
    }
    opt.zero_grad();
    const double epoch_loss = total / static_cast<double>(mols.size());
    res.epoch_loss.push_back(epoch_loss);
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    res.log.push_back({ epoch, epoch_loss, cfg.lr, ms });
    if (on_epoch)
      on_epoch(res.log.back());
  }
  return res;
}

inline nn::Checkpoint model_checkpoint(const MultiViewModel &model) {
  nn::Checkpoint c =
      nn::make_checkpoint(model.all_params(), model.config().arch_hash());
  c.meta["views"] = model.mask().str();
  return c;
}

/// Loads every parameter of the model; checkpoints may hold more.
inline void load_model(MultiViewModel &model, const nn::Checkpoint &c) {
  nn::load_params(c, model.all_params(), model.config().arch_hash());
}

}  // namespace moco::pipeline
