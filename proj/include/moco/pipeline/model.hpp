//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "moco/encoders.hpp"
#include "moco/error.hpp"
#include "moco/fusion.hpp"
#include "moco/objective.hpp"

namespace moco::pipeline {

using encoders::View;
using nn::Tensor;

/// Subset of the four views fed to fusion.
struct ViewMask {
  std::array<bool, encoders::kNumViews> on { true, true, true, true };

  static ViewMask only(View v) {
    ViewMask m;
    m.on.fill(false);
    m.on[static_cast<int>(v)] = true;
    return m;
  }

  /// Comma-separated view names, e.g. "2d,fp".
  static ViewMask parse(const std::string &text) {
    ViewMask m;
    m.on.fill(false);
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      bool found = false;
      for (View v: encoders::kAllViews) {
        if (item == encoders::view_name(v)) {
          m.on[static_cast<int>(v)] = true;
          found = true;
        }
      }
      if (!found)
        throw ConfigError("unknown view '" + item + "' (expected 2d, 3d, fp, sm)");
    }
    if (m.active().empty())
      throw ConfigError("view mask selects no view");
    return m;
  }

  bool operator[](View v) const { return on[static_cast<int>(v)]; }

  std::vector<View> active() const {
    std::vector<View> out;
    for (View v: encoders::kAllViews) {
      if ((*this)[v])
        out.push_back(v);
    }
    return out;
  }

  std::string str() const {
    std::string s;
    for (View v: active())
      s += (s.empty() ? "" : ",") + std::string(encoders::view_name(v));
    return s;
  }
};

/// Four view encoders, the fusion module and the contrastive critic.
/// Encoders of views outside the mask are never built.
class MultiViewModel {
public:
  MultiViewModel(const encoders::ModelConfig &cfg, std::uint64_t seed,
                 ViewMask mask = {},
                 fusion::FusionMode mode = fusion::FusionMode::kAttention)
      : cfg_(cfg), mask_(mask), fusion_(cfg.dim, seed, mode),
        critic_(cfg.dim, cfg.critic_hidden > 0 ? cfg.critic_hidden : cfg.dim,
                seed) {
    if (mask[View::k2D])
      gin_.emplace(cfg.dim, cfg.gin, seed);
    if (mask[View::k3D])
      schnet_.emplace(cfg.dim, cfg.schnet, seed);
    if (mask[View::kFP]) {
      if (cfg.fp.mlp)
        fp_mlp_.emplace(cfg.dim, cfg.fp, seed);
      else
        fp_.emplace(cfg.dim, cfg.fp, seed);
    }
    if (mask[View::kSM])
      sm_.emplace(cfg.dim, cfg.sm, seed);
  }

  const encoders::ModelConfig &config() const { return cfg_; }
  const ViewMask &mask() const { return mask_; }
  bool needs_positions() const { return mask_[View::k3D]; }

  fusion::Fusion &fusion() { return fusion_; }
  const fusion::Fusion &fusion() const { return fusion_; }
  const objective::Critic &critic() const { return critic_; }
  encoders::SmilesEncoder *smiles() { return sm_ ? &*sm_ : nullptr; }
  const encoders::FingerprintEncoder *fingerprint() const {
    return fp_ ? &*fp_ : nullptr;
  }

  Tensor embed_view(View v, const encoders::GraphBatch &b,
                    const encoders::ForwardMode &mode) const {
    switch (v) {
    case View::k2D:
      return gin_->forward(b, mode);
    case View::k3D:
      return schnet_->forward(b, mode);
    case View::kFP:
      return fp_ ? fp_->forward(b, mode) : fp_mlp_->forward(b, mode);
    case View::kSM:
      return sm_->forward(b, mode);
    }
    throw Error("unknown view");
  }

  fusion::ViewSet embed(const encoders::GraphBatch &b,
                        const encoders::ForwardMode &mode = {}) const {
    fusion::ViewSet vs;
    for (View v: mask_.active()) {
      vs.views.push_back(v);
      vs.embeddings.push_back(embed_view(v, b, mode));
    }
    return vs;
  }

  Tensor fuse(const fusion::ViewSet &vs) const { return fusion_.forward(vs); }

  /// Encoder parameters only, trainable ones.
  nn::ParamList encoder_params() const {
    nn::ParamList out;
    if (gin_)
      gin_->collect(out);
    if (schnet_)
      schnet_->collect(out);
    if (fp_)
      fp_->collect(out);
    if (fp_mlp_)
      fp_mlp_->collect(out);
    if (sm_)
      sm_->collect(out);
    return out;
  }

  /// Trainable parameters of encoders, fusion (unless frozen) and critic.
  nn::ParamList params(bool with_critic = true) const {
    nn::ParamList out = encoder_params();
    if (!fusion_.frozen()) {
      for (const nn::NamedParam &p: fusion_.params())
        out.push_back(p);
    }
    if (with_critic) {
      for (const nn::NamedParam &p: critic_.params())
        out.push_back(p);
    }
    return out;
  }

  /// Every parameter, frozen ones included; this is what checkpoints hold.
  nn::ParamList all_params() const {
    nn::ParamList out;
    if (gin_)
      gin_->collect(out);
    if (schnet_)
      schnet_->collect(out);
    if (fp_)
      fp_->collect(out);
    if (fp_mlp_)
      fp_mlp_->collect(out);
    if (sm_)
      sm_->collect_all(out);
    for (const nn::NamedParam &p: fusion_.params())
      out.push_back(p);
    for (const nn::NamedParam &p: critic_.params())
      out.push_back(p);
    return out;
  }

private:
  encoders::ModelConfig cfg_;
  ViewMask mask_;
  std::optional<encoders::GinEncoder> gin_;
  std::optional<encoders::SchNetEncoder> schnet_;
  std::optional<encoders::FingerprintEncoder> fp_;
  std::optional<encoders::FingerprintMlpEncoder> fp_mlp_;
  std::optional<encoders::SmilesEncoder> sm_;
  fusion::Fusion fusion_;
  objective::Critic critic_;
};

}  // namespace moco::pipeline
