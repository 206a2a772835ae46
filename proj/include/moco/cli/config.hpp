//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "moco/error.hpp"
#include "moco/pipeline.hpp"

namespace moco::cli {

enum class KeyType { kInt, kReal, kBool, kString, kList, kChoice };

struct KeySpec {
  std::string key;
  KeyType type;
  std::string fallback;
  std::vector<std::string> choices;  // kChoice only
  double min = -HUGE_VAL;            // numeric lower bound
  bool min_exclusive = false;
  double max = HUGE_VAL;             // numeric upper bound (exclusive)
};

// clang-format off
inline const std::vector<KeySpec> &config_schema() {
  static const std::vector<KeySpec> schema {
    { "seed", KeyType::kInt, "0", {}, 0 },
    { "run.dir", KeyType::kString, "run", {} },
    { "data.name", KeyType::kString, "", {} },
    { "data.csv", KeyType::kString, "", {} },
    { "data.conformer_dir", KeyType::kString, "", {} },
    { "data.task", KeyType::kChoice, "classify", { "classify", "regress" } },
    { "data.labels", KeyType::kList, "", {} },
    { "data.split", KeyType::kChoice, "scaffold", { "scaffold", "random" } },
    { "data.max_skip_fraction", KeyType::kReal, "0.1", {}, 0, false, 1.0000001 },
    { "featurize.fp_bits", KeyType::kInt, "1024", {}, 1 },
    { "featurize.fp_radius", KeyType::kInt, "2", {}, 0 },
    { "tokenizer.vocab", KeyType::kString, "", {} },
    { "tokenizer.vocab_size", KeyType::kInt, "256", {}, 1 },
    { "cache.enabled", KeyType::kBool, "true", {} },
    { "cache.audit", KeyType::kInt, "8", {}, 0 },
    { "model.dim", KeyType::kInt, "300", {}, 1 },
    { "model.views", KeyType::kList, "2d,3d,fp,sm", {} },
    { "encoder.gin.layers", KeyType::kInt, "5", {}, 1 },
    { "encoder.gin.dropout", KeyType::kReal, "0", {}, 0, false, 1 },
    { "encoder.gin.lr", KeyType::kReal, "1e-3", {}, 0, true },
    { "encoder.schnet.hidden", KeyType::kInt, "128", {}, 1 },
    { "encoder.schnet.layers", KeyType::kInt, "6", {}, 1 },
    { "encoder.schnet.rbf", KeyType::kInt, "50", {}, 1 },
    { "encoder.schnet.rbf_max", KeyType::kReal, "10", {}, 0, true },
    { "encoder.schnet.gamma", KeyType::kReal, "10", {}, 0, true },
    { "encoder.schnet.cutoff", KeyType::kReal, "0", {}, 0 },
    { "encoder.schnet.dropout", KeyType::kReal, "0", {}, 0, false, 1 },
    { "encoder.schnet.lr", KeyType::kReal, "1e-3", {}, 0, true },
    { "encoder.fp.dim", KeyType::kInt, "64", {}, 1 },
    { "encoder.fp.heads", KeyType::kInt, "8", {}, 1 },
    { "encoder.fp.mlp", KeyType::kBool, "false", {} },
    { "encoder.fp.dropout", KeyType::kReal, "0", {}, 0, false, 1 },
    { "encoder.fp.lr", KeyType::kReal, "1e-3", {}, 0, true },
    { "encoder.sm.dim", KeyType::kInt, "128", {}, 1 },
    { "encoder.sm.layers", KeyType::kInt, "2", {}, 1 },
    { "encoder.sm.heads", KeyType::kInt, "4", {}, 1 },
    { "encoder.sm.ffn", KeyType::kInt, "256", {}, 1 },
    { "encoder.sm.max_len", KeyType::kInt, "128", {}, 2 },
    { "encoder.sm.frozen", KeyType::kBool, "true", {} },
    { "encoder.sm.dropout", KeyType::kReal, "0", {}, 0, false, 1 },
    { "encoder.sm.lr", KeyType::kReal, "1e-3", {}, 0, true },
    { "encoder.sm.backbone_lr", KeyType::kReal, "1e-4", {}, 0, true },
    { "mlm.epochs", KeyType::kInt, "4", {}, 0 },
    { "mlm.batch_size", KeyType::kInt, "32", {}, 1 },
    { "mlm.lr", KeyType::kReal, "1e-3", {}, 0, true },
    { "mlm.mask_rate", KeyType::kReal, "0.15", {}, 0, true, 1 },
    { "fusion.mode", KeyType::kChoice, "attention", { "attention", "max", "mean", "frozen" } },
    { "fusion.lr", KeyType::kReal, "1e-3", {}, 0, true },
    { "objective.tau", KeyType::kReal, "0.1", {}, 0, true },
    { "objective.lr", KeyType::kReal, "1e-3", {}, 0, true },
    { "objective.critic_hidden", KeyType::kInt, "0", {}, 0 },
    { "pretrain.epochs", KeyType::kInt, "100", {}, 0 },
    { "pretrain.batch_size", KeyType::kInt, "256", {}, 1 },
    { "pretrain.mlm", KeyType::kBool, "true", {} },
    { "finetune.checkpoint", KeyType::kString, "", {} },
    { "finetune.epochs", KeyType::kInt, "30", {}, 0 },
    { "finetune.batch_size", KeyType::kInt, "32", {}, 1 },
    { "finetune.seeds", KeyType::kList, "0,1,2", {} },
    { "finetune.lr_scale", KeyType::kReal, "0.1", {}, 0, true },
    { "finetune.head_lr", KeyType::kReal, "1e-3", {}, 0, true },
    { "finetune.selection", KeyType::kChoice, "auto", { "auto", "roc_auc", "ap", "mae", "rmse" } },
    { "eval.checkpoint", KeyType::kString, "", {} },
    { "case_study.checkpoint", KeyType::kString, "", {} },
    { "case_study.chirality_csv", KeyType::kString, "", {} },
    { "case_study.chirality_conformer_dir", KeyType::kString, "", {} },
    { "case_study.chirality_label", KeyType::kString, "label", {} },
    { "case_study.ridge_lambda", KeyType::kReal, "1", {}, 0 },
    { "case_study.logistic_lambda", KeyType::kReal, "1", {}, 0 },
    { "export.checkpoint", KeyType::kString, "", {} },
    { "export.svg", KeyType::kString, "", {} },
  };
  return schema;
}
// clang-format on

inline const KeySpec *find_key(const std::string &key) {
  for (const KeySpec &s: config_schema()) {
    if (s.key == key)
      return &s;
  }
  return nullptr;
}

inline std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty())
      out.push_back(item);
  }
  return out;
}

/// Checks one value against its key; returns an empty string when valid.
inline std::string check_value(const KeySpec &spec, const std::string &v) {
  auto bounds = [&](double x) -> std::string {
    const bool low = spec.min_exclusive ? x <= spec.min : x < spec.min;
    if (low || x >= spec.max) {
      std::ostringstream os;
      os << spec.key << " = " << v << " is out of range";
      if (spec.min != -HUGE_VAL)
        os << (spec.min_exclusive ? " (must be > " : " (must be >= ") << spec.min
           << (spec.max != HUGE_VAL ? "" : ")");
      if (spec.max != HUGE_VAL)
        os << (spec.min != -HUGE_VAL ? ", < " : " (must be < ") << spec.max << ")";
      return os.str();
    }
    return "";
  };
  switch (spec.type) {
  case KeyType::kInt: {
    std::size_t used = 0;
    long long x = 0;
    try {
      x = std::stoll(v, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (v.empty() || used != v.size())
      return spec.key + " = '" + v + "' is not an integer";
    return bounds(static_cast<double>(x));
  }
  case KeyType::kReal: {
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(v, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (v.empty() || used != v.size() || !std::isfinite(x))
      return spec.key + " = '" + v + "' is not a number";
    return bounds(x);
  }
  case KeyType::kBool:
    if (v != "true" && v != "false")
      return spec.key + " = '" + v + "' must be true or false";
    return "";
  case KeyType::kChoice:
    if (std::find(spec.choices.begin(), spec.choices.end(), v) == spec.choices.end()) {
      std::string opts;
      for (const std::string &c: spec.choices)
        opts += (opts.empty() ? "" : "|") + c;
      return spec.key + " = '" + v + "' must be one of " + opts;
    }
    return "";
  case KeyType::kString:
  case KeyType::kList:
    return "";
  }
  return "";
}

/// Flat key = value settings over a fixed schema. Every problem found is
/// collected; `throw_if_errors` reports them all at once.
class Config {
public:
  Config() {
    for (const KeySpec &s: config_schema())
      values_[s.key] = s.fallback;
  }

  static Config parse(std::istream &is, const std::string &where) {
    Config c;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos)
        line.resize(hash);
      line = trim(line);
      if (line.empty())
        continue;
      const std::string loc = where + ":" + std::to_string(lineno);
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        c.errors_.push_back(loc + ": expected 'key = value'");
        continue;
      }
      c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), loc);
    }
    return c;
  }

  static Config load(const std::string &path) {
    std::ifstream in(path);
    if (!in)
      throw ConfigError("cannot open config file " + path);
    return parse(in, path);
  }

  void set(const std::string &key, const std::string &value,
           const std::string &where = "override") {
    const KeySpec *spec = find_key(key);
    if (!spec) {
      errors_.push_back(where + ": unknown key '" + key + "'");
      return;
    }
    const std::string err = check_value(*spec, value);
    if (!err.empty()) {
      errors_.push_back(where + ": " + err);
      return;
    }
    values_[key] = value;
  }

  void error(const std::string &msg) { errors_.push_back(msg); }
  const std::vector<std::string> &errors() const { return errors_; }

  void throw_if_errors() const {
    if (errors_.empty())
      return;
    std::string msg = std::to_string(errors_.size()) + " configuration error(s):";
    for (const std::string &e: errors_)
      msg += "\n  " + e;
    throw ConfigError(msg);
  }

  const std::string &str(const std::string &key) const { return values_.at(key); }
  long long integer(const std::string &key) const { return std::stoll(str(key)); }
  int i32(const std::string &key) const { return static_cast<int>(integer(key)); }
  double real(const std::string &key) const { return std::stod(str(key)); }
  bool flag(const std::string &key) const { return str(key) == "true"; }
  std::vector<std::string> list(const std::string &key) const {
    return split_list(str(key));
  }

  /// Every key with its effective value, sorted.
  void write_resolved(std::ostream &os) const {
    for (const auto &[k, v]: values_)
      os << k << " = " << v << '\n';
  }

private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> errors_;
};

/// Cross-key checks that do not depend on the command.
inline void validate_common(Config &c) {
  const long long bits = c.integer("featurize.fp_bits");
  if (bits <= 0 || (bits & (bits - 1)) != 0)
    c.error("featurize.fp_bits = " + c.str("featurize.fp_bits") +
            " must be a power of two");
  try {
    pipeline::ViewMask::parse(c.str("model.views"));
  } catch (const ConfigError &e) {
    c.error(std::string("model.views: ") + e.what());
  }
  if (c.i32("encoder.fp.dim") % c.i32("encoder.fp.heads") != 0)
    c.error("encoder.fp.dim must be divisible by encoder.fp.heads");
  if (c.i32("encoder.sm.dim") % c.i32("encoder.sm.heads") != 0)
    c.error("encoder.sm.dim must be divisible by encoder.sm.heads");
  for (const std::string &s: c.list("finetune.seeds")) {
    if (s.find_first_not_of("0123456789") != std::string::npos)
      c.error("finetune.seeds: '" + s + "' is not a non-negative integer");
  }
  if (c.list("finetune.seeds").empty())
    c.error("finetune.seeds must list at least one seed");
}

inline pipeline::ViewMask view_mask(const Config &c) {
  return pipeline::ViewMask::parse(c.str("model.views"));
}

inline featurize::FeaturizerConfig featurizer_config(const Config &c) {
  return { c.i32("featurize.fp_bits"), c.i32("featurize.fp_radius") };
}

inline encoders::ModelConfig model_config(const Config &c, int vocab_size) {
  encoders::ModelConfig mc;
  mc.dim = c.i32("model.dim");
  mc.gin.layers = c.i32("encoder.gin.layers");
  mc.gin.dropout = c.real("encoder.gin.dropout");
  mc.schnet.hidden = c.i32("encoder.schnet.hidden");
  mc.schnet.layers = c.i32("encoder.schnet.layers");
  mc.schnet.rbf = c.i32("encoder.schnet.rbf");
  mc.schnet.rbf_max = c.real("encoder.schnet.rbf_max");
  mc.schnet.gamma = c.real("encoder.schnet.gamma");
  mc.schnet.cutoff = c.real("encoder.schnet.cutoff");
  mc.schnet.dropout = c.real("encoder.schnet.dropout");
  mc.fp.bits = c.i32("featurize.fp_bits");
  mc.fp.dim = c.i32("encoder.fp.dim");
  mc.fp.heads = c.i32("encoder.fp.heads");
  mc.fp.mlp = c.flag("encoder.fp.mlp");
  mc.fp.dropout = c.real("encoder.fp.dropout");
  mc.sm.dim = c.i32("encoder.sm.dim");
  mc.sm.layers = c.i32("encoder.sm.layers");
  mc.sm.heads = c.i32("encoder.sm.heads");
  mc.sm.ffn = c.i32("encoder.sm.ffn");
  mc.sm.max_len = c.i32("encoder.sm.max_len");
  mc.sm.frozen = c.flag("encoder.sm.frozen");
  mc.sm.dropout = c.real("encoder.sm.dropout");
  mc.sm.vocab = vocab_size;
  mc.critic_hidden = c.i32("objective.critic_hidden");
  return mc;
}

/// Optimizer groups and their rates, each multiplied by `scale`.
inline std::map<std::string, double> group_rates(const Config &c, double scale) {
  return {
    { "encoder.2d", scale * c.real("encoder.gin.lr") },
    { "encoder.3d", scale * c.real("encoder.schnet.lr") },
    { "encoder.fp", scale * c.real("encoder.fp.lr") },
    { "encoder.sm", scale * c.real("encoder.sm.lr") },
    { "encoder.sm.backbone", scale * c.real("encoder.sm.backbone_lr") },
    { "fusion", scale * c.real("fusion.lr") },
    { "critic", scale * c.real("objective.lr") },
  };
}

inline fusion::FusionMode fusion_mode(const Config &c) {
  const std::string &m = c.str("fusion.mode");
  if (m == "max")
    return fusion::FusionMode::kMax;
  if (m == "mean")
    return fusion::FusionMode::kMean;
  return fusion::FusionMode::kAttention;
}

inline pipeline::PretrainConfig pretrain_config(const Config &c) {
  pipeline::PretrainConfig pc;
  pc.epochs = c.i32("pretrain.epochs");
  pc.batch_size = c.i32("pretrain.batch_size");
  pc.tau = c.real("objective.tau");
  pc.seed = static_cast<std::uint64_t>(c.integer("seed"));
  pc.lr = c.real("encoder.gin.lr");
  pc.group_lr = group_rates(c, 1.0);
  pc.run_mlm = c.flag("pretrain.mlm");
  pc.mlm.epochs = c.i32("mlm.epochs");
  pc.mlm.batch_size = c.i32("mlm.batch_size");
  pc.mlm.lr = c.real("mlm.lr");
  pc.mlm.mask_rate = c.real("mlm.mask_rate");
  return pc;
}

inline pipeline::TaskKind task_kind(const Config &c) {
  return c.str("data.task") == "regress" ? pipeline::TaskKind::kRegress
                                         : pipeline::TaskKind::kClassify;
}

inline pipeline::FinetuneConfig finetune_config(const Config &c) {
  pipeline::FinetuneConfig fc;
  fc.task = task_kind(c);
  fc.epochs = c.i32("finetune.epochs");
  fc.batch_size = c.i32("finetune.batch_size");
  fc.seeds.clear();
  for (const std::string &s: c.list("finetune.seeds"))
    fc.seeds.push_back(std::stoull(s));
  const double scale = c.real("finetune.lr_scale");
  fc.group_lr = group_rates(c, scale);
  fc.lr = scale * c.real("encoder.gin.lr");
  fc.head_lr = c.real("finetune.head_lr");
  fc.views = view_mask(c);
  fc.fusion = fusion_mode(c);
  fc.freeze_fusion = c.str("fusion.mode") == "frozen";
  fc.split = c.str("data.split") == "random" ? pipeline::SplitMethod::kRandom
                                             : pipeline::SplitMethod::kScaffold;
  const std::string &sel = c.str("finetune.selection");
  if (sel == "roc_auc")
    fc.selection = pipeline::Metric::kRocAuc;
  else if (sel == "ap")
    fc.selection = pipeline::Metric::kAp;
  else if (sel == "mae")
    fc.selection = pipeline::Metric::kMae;
  else if (sel == "rmse")
    fc.selection = pipeline::Metric::kRmse;
  return fc;
}

inline pipeline::DatasetManifest manifest(const Config &c) {
  pipeline::DatasetManifest m;
  m.csv = c.str("data.csv");
  m.name = c.str("data.name");
  if (m.name.empty())
    m.name = std::filesystem::path(m.csv).stem().string();
  m.conformer_dir = c.str("data.conformer_dir");
  m.task = task_kind(c);
  m.labels = c.list("data.labels");
  return m;
}

}  // namespace moco::cli
