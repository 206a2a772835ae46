//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <sstream>
#include <string>
#include <string_view>

#include "moco/util/hash.hpp"
#include "moco/util/rng.hpp"

namespace moco::encoders {

enum class View : int { k2D = 0, k3D = 1, kFP = 2, kSM = 3 };

inline constexpr int kNumViews = 4;
inline constexpr std::array<View, kNumViews> kAllViews { View::k2D, View::k3D,
                                                         View::kFP, View::kSM };

constexpr std::string_view view_name(View v) {
  switch (v) {
  case View::k2D:
    return "2d";
  case View::k3D:
    return "3d";
  case View::kFP:
    return "fp";
  case View::kSM:
    return "sm";
  }
  return "?";
}

struct GinConfig {
  int layers = 5;
  double dropout = 0.0;
};

struct SchNetConfig {
  int hidden = 128;
  int layers = 6;
  int rbf = 50;
  double rbf_max = 10.0;  // Å, last RBF center
  double gamma = 10.0;
  double cutoff = 0.0;  // Å; 0 keeps all pairs
  double dropout = 0.0;
};

struct FpConfig {
  int bits = 1024;
  int dim = 64;
  int heads = 8;
  bool mlp = false;  // plain MLP over the bit vector instead of attention
  double dropout = 0.0;
};

struct SmilesConfig {
  int dim = 128;
  int layers = 2;
  int heads = 4;
  int ffn = 256;
  int max_len = 128;
  int vocab = 0;  // set from the tokenizer
  bool frozen = true;
  double dropout = 0.0;
};

/// Architecture of all view encoders plus the shared embedding width.
struct ModelConfig {
  int dim = 300;
  GinConfig gin;
  SchNetConfig schnet;
  FpConfig fp;
  SmilesConfig sm;
  int critic_hidden = 0;  // 0 means dim

  /// Hash over every field that fixes a parameter shape.
  std::string arch_hash() const {
    std::ostringstream os;
    os << "dim=" << dim << ";gin=" << gin.layers << ";schnet=" << schnet.hidden
       << ',' << schnet.layers << ',' << schnet.rbf << ";fp=" << fp.bits << ','
       << fp.dim << ',' << fp.heads << ',' << fp.mlp << ";sm=" << sm.dim << ','
       << sm.layers << ',' << sm.heads << ',' << sm.ffn << ',' << sm.max_len
       << ',' << sm.vocab << ";critic=" << critic_hidden;
    return to_hex(Fnv1a64().bytes(os.str()).value());
  }
};

/// Training-time switches for a forward pass.
struct ForwardMode {
  bool train = false;
  Rng *rng = nullptr;  // dropout source; required when training with dropout
};

}  // namespace moco::encoders
