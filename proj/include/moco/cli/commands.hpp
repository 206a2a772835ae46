//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "moco/cli/cache.hpp"
#include "moco/cli/config.hpp"
#include "moco/error.hpp"
#include "moco/nn.hpp"
#include "moco/pipeline.hpp"

namespace moco::cli {

namespace fs = std::filesystem;
using encoders::View;

struct Options {
  std::string command;
  std::string config;
  std::optional<long long> seed;
  bool dry_run = false;
  std::string views;
  std::string fusion;
  std::vector<std::string> sets;  // key=value overrides
};

/// Output streams shared by every command.
struct Io {
  std::ostream &out;
  std::ostream &err;
};

inline bool exists(const std::string &path) {
  return !path.empty() && fs::exists(path);
}

inline void require_file(Config &c, const std::string &key) {
  const std::string &v = c.str(key);
  if (v.empty())
    c.error(key + " is required");
  else if (!fs::exists(v))
    c.error(key + " = " + v + ": file not found");
}

inline void require_dir(Config &c, const std::string &key) {
  const std::string &v = c.str(key);
  if (v.empty())
    c.error(key + " is required");
  else if (!fs::is_directory(v))
    c.error(key + " = " + v + ": directory not found");
}

/// Resolved configuration: file, then --set overrides, then flags, then
/// command-specific checks. All problems are reported together.
inline Config resolve_config(const Options &o) {
  Config c = o.config.empty() ? Config() : Config::load(o.config);
  for (const std::string &kv: o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      c.error("--set " + kv + ": expected key=value");
      continue;
    }
    c.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)), "--set");
  }
  if (o.seed)
    c.set("seed", std::to_string(*o.seed), "--seed");
  if (!o.views.empty())
    c.set("model.views", o.views, "--views");
  if (!o.fusion.empty())
    c.set("fusion.mode", o.fusion, "--fusion");
  validate_common(c);

  const std::string &cmd = o.command;
  bool needs_3d = false;
  try {
    needs_3d = view_mask(c)[View::k3D];
  } catch (const ConfigError &) {
    // already recorded by validate_common
  }
  if (cmd == "tokenize-train") {
    require_file(c, "data.csv");
    if (c.str("tokenizer.vocab").empty())
      c.error("tokenizer.vocab is required (output path)");
  }
  if (cmd == "featurize" || cmd == "pretrain" || cmd == "finetune" ||
      cmd == "eval" || cmd == "export-attention") {
    require_file(c, "data.csv");
    require_file(c, "tokenizer.vocab");
  }
  if ((cmd == "pretrain" || cmd == "finetune" || cmd == "eval" ||
       cmd == "export-attention") &&
      needs_3d)
    require_dir(c, "data.conformer_dir");
  if (cmd == "finetune" || cmd == "eval") {
    if (c.list("data.labels").empty())
      c.error("data.labels must name at least one label column");
  }
  if (cmd == "finetune" && c.str("finetune.checkpoint").empty())
    c.error("finetune.checkpoint is required");
  if (cmd == "eval" && c.str("eval.checkpoint").empty())
    c.error("eval.checkpoint is required");
  if (cmd == "export-attention" && c.str("export.checkpoint").empty())
    c.error("export.checkpoint is required");
  if (cmd == "case-study") {
    require_file(c, "tokenizer.vocab");
    if (c.str("case_study.chirality_csv").empty() && c.str("data.csv").empty())
      c.error("case-study needs case_study.chirality_csv and/or data.csv");
    if (!c.str("case_study.chirality_csv").empty()) {
      require_file(c, "case_study.chirality_csv");
      if (needs_3d)
        require_dir(c, "case_study.chirality_conformer_dir");
    }
    if (!c.str("data.csv").empty()) {
      require_file(c, "data.csv");
      if (needs_3d)
        require_dir(c, "data.conformer_dir");
    }
  }
  if (cmd == "export-attention" && c.errors().empty() && fusion_mode(c) != fusion::FusionMode::kAttention)
    c.error("export-attention needs fusion.mode attention or frozen");
  c.throw_if_errors();
  return c;
}

inline void write_file(const fs::path &p, const std::string &content) {
  if (!p.parent_path().empty())
    fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out)
    throw Error("cannot write " + p.string());
}

/// Every run directory records the resolved configuration and seed.
inline fs::path prepare_run_dir(const Config &c, const std::string &command) {
  const fs::path dir = c.str("run.dir");
  fs::create_directories(dir);
  std::ostringstream os;
  os << "# moco " << command << ", seed " << c.str("seed") << '\n';
  c.write_resolved(os);
  write_file(dir / "config.resolved", os.str());
  return dir;
}

struct Prepared {
  featurize::BpeVocab vocab;
  pipeline::FeaturizedSet data;
  CacheStats stats;
};

inline Prepared prepare_dataset(const Config &c, const pipeline::DatasetManifest &m,
                                bool require_positions, Io io) {
  Prepared p;
  p.vocab = featurize::load_vocab(c.str("tokenizer.vocab"));
  const featurize::FeaturizerConfig fc = featurizer_config(c);
  const pipeline::Dataset d = pipeline::load_dataset(m);
  std::optional<FeatureCache> cache;
  if (c.flag("cache.enabled")) {
    const fs::path root = cache_root((fs::path(c.str("run.dir")) / "cache").string());
    cache.emplace((root / (m.name + ".cache")).string(), featurizer_hash(fc, p.vocab));
  }
  CachedFeaturization cf =
      featurize_with_cache(d, p.vocab, fc, require_positions,
                           cache ? &*cache : nullptr, c.i32("cache.audit"),
                           static_cast<std::uint64_t>(c.integer("seed")));
  for (const pipeline::SkippedRecord &s: cf.set.skipped)
    io.err << "skipped " << m.name << " row " << s.row << ": " << s.reason << '\n';
  const double frac = cf.stats.processed == 0
                          ? 0.0
                          : static_cast<double>(cf.stats.skipped) / cf.stats.processed;
  if (frac > c.real("data.max_skip_fraction"))
    throw DataError(std::to_string(cf.stats.skipped) + " of " +
                    std::to_string(cf.stats.processed) + " rows of " + m.name +
                    " could not be featurized (limit data.max_skip_fraction = " +
                    c.str("data.max_skip_fraction") + ")");
  p.data = std::move(cf.set);
  p.stats = cf.stats;
  return p;
}

inline void print_stats(std::ostream &os, const CacheStats &s) {
  os << "processed " << s.processed << " parsed " << s.parsed << " skipped "
     << s.skipped << " cache_hits " << s.hits << " audited " << s.audited << '\n';
}

inline void drop_unusable_rows(const pipeline::MultiViewModel &model,
                               std::vector<pipeline::Molecule> &mols, Io io) {
  for (const pipeline::SkippedRecord &s: pipeline::drop_unusable(model, mols))
    io.err << "skipped row " << s.row << ": " << s.reason << '\n';
}

inline void print_plan(const Config &c, const std::string &cmd, Io io) {
  io.out << "dry run: " << cmd << '\n';
  io.out << "  seed " << c.str("seed") << ", views " << c.str("model.views")
         << ", fusion " << c.str("fusion.mode") << '\n';
  if (!c.str("data.csv").empty())
    io.out << "  dataset " << c.str("data.csv") << '\n';
  if (cmd == "pretrain")
    io.out << "  masked-token pretraining: "
           << (c.flag("pretrain.mlm") ? c.str("mlm.epochs") + " epoch(s)" : "off")
           << "\n  contrastive pretraining: " << c.str("pretrain.epochs")
           << " epoch(s), batch " << c.str("pretrain.batch_size") << ", tau "
           << c.str("objective.tau") << "\n  writes "
           << (fs::path(c.str("run.dir")) / "checkpoint.ckpt").string() << '\n';
  if (cmd == "finetune")
    io.out << "  start from " << c.str("finetune.checkpoint") << "\n  "
           << c.str("finetune.epochs") << " epoch(s) per seed, seeds "
           << c.str("finetune.seeds") << ", split " << c.str("data.split")
           << "\n  writes "
           << (fs::path(c.str("run.dir")) / "metrics.csv").string() << '\n';
  io.out << "configuration:\n";
  c.write_resolved(io.out);
}

inline int cmd_tokenize_train(const Config &c, Io io) {
  const pipeline::DatasetManifest m = manifest(c);
  const pipeline::Dataset d = pipeline::load_dataset(m);
  std::vector<std::string> corpus;
  for (const pipeline::Record &r: d.records)
    corpus.push_back(r.smiles);
  const featurize::BpeVocab v =
      featurize::bpe_train(corpus, c.i32("tokenizer.vocab_size"));
  featurize::save_vocab(c.str("tokenizer.vocab"), v);
  io.out << "vocabulary of " << v.size() << " tokens written to "
         << c.str("tokenizer.vocab") << '\n';
  return 0;
}

inline int cmd_featurize(const Config &c, Io io) {
  const Prepared p =
      prepare_dataset(c, manifest(c), view_mask(c)[View::k3D] &&
                                          !c.str("data.conformer_dir").empty(),
                      io);
  print_stats(io.out, p.stats);
  return 0;
}

inline std::string checkpoint_vocab_hash(const featurize::BpeVocab &v) {
  std::ostringstream os;
  featurize::write_vocab(os, v);
  return to_hex(Fnv1a64().bytes(os.str()).value());
}

inline void check_vocab(const nn::Checkpoint &ck, const featurize::BpeVocab &v) {
  auto it = ck.meta.find("vocab");
  if (it != ck.meta.end() && it->second != checkpoint_vocab_hash(v))
    throw IncompatibleCheckpoint("checkpoint was trained with another tokenizer "
                                 "vocabulary");
}

inline int cmd_pretrain(const Config &c, Io io) {
  const fs::path dir = prepare_run_dir(c, "pretrain");
  const pipeline::ViewMask mask = view_mask(c);
  Prepared p = prepare_dataset(c, manifest(c), mask[View::k3D], io);
  pipeline::MultiViewModel model(model_config(c, p.vocab.size()),
                                 static_cast<std::uint64_t>(c.integer("seed")),
                                 mask, fusion_mode(c));
  drop_unusable_rows(model, p.data.molecules, io);
  print_stats(io.out, p.stats);

  const fs::path log_path = dir / "train_log.csv";
  const bool fresh = !fs::exists(log_path) || fs::file_size(log_path) == 0;
  std::ofstream log(log_path, std::ios::app);
  if (fresh)
    pipeline::write_train_log_header(log);
  const pipeline::PretrainResult r = pipeline::pretrain(
      model, p.data.molecules, pretrain_config(c),
      [&](const pipeline::TrainLogRow &row) {
        pipeline::write_train_log_row(log, row);
        log.flush();
        io.out << "epoch " << row.epoch << " loss " << pipeline::format_double(row.loss)
               << '\n';
      });
  nn::Checkpoint ck = pipeline::model_checkpoint(model);
  ck.meta["seed"] = c.str("seed");
  ck.meta["vocab"] = checkpoint_vocab_hash(p.vocab);
  ck.meta["fp_bits"] = c.str("featurize.fp_bits");
  nn::save_checkpoint((dir / "checkpoint.ckpt").string(), ck);
  io.out << "checkpoint written to " << (dir / "checkpoint.ckpt").string() << '\n';
  return 0;
}

inline int cmd_finetune(const Config &c, Io io) {
  const nn::Checkpoint start = nn::load_checkpoint(c.str("finetune.checkpoint"));
  const fs::path dir = prepare_run_dir(c, "finetune");
  const pipeline::FinetuneConfig fc = finetune_config(c);
  Prepared p = prepare_dataset(c, manifest(c), fc.views[View::k3D], io);
  check_vocab(start, p.vocab);
  const encoders::ModelConfig mc = model_config(c, p.vocab.size());
  {
    const pipeline::MultiViewModel probe(mc, 0, fc.views);
    drop_unusable_rows(probe, p.data.molecules, io);
  }
  print_stats(io.out, p.stats);
  const pipeline::MetricsReport r = pipeline::finetune(
      mc, &start, p.data.molecules, fc,
      [&](const pipeline::Predictor &pred, const pipeline::SeedResult &s) {
        nn::Checkpoint ck = pipeline::predictor_checkpoint(pred);
        ck.meta["seed"] = std::to_string(s.seed);
        ck.meta["vocab"] = checkpoint_vocab_hash(p.vocab);
        nn::save_checkpoint(
            (dir / ("finetuned_seed" + std::to_string(s.seed) + ".ckpt")).string(), ck);
      });
  std::ostringstream csv, text;
  pipeline::write_metrics_csv(csv, r, fc.reported());
  pipeline::write_metrics_text(text, r, fc.reported());
  write_file(dir / "metrics.csv", csv.str());
  write_file(dir / "metrics.txt", text.str());
  io.out << text.str();
  return 0;
}

inline int cmd_eval(const Config &c, Io io) {
  const nn::Checkpoint ck = nn::load_checkpoint(c.str("eval.checkpoint"));
  if (!ck.has_prefix("head."))
    throw IncompatibleCheckpoint("eval needs a fine-tuned checkpoint with a "
                                 "prediction head");
  const fs::path dir = prepare_run_dir(c, "eval");
  pipeline::FinetuneConfig fc = finetune_config(c);
  Prepared p = prepare_dataset(c, manifest(c), fc.views[View::k3D], io);
  check_vocab(ck, p.vocab);
  const int tasks = static_cast<int>(ck.params.at("head.weight").cols());
  if (tasks != static_cast<int>(c.list("data.labels").size()))
    throw IncompatibleCheckpoint("checkpoint head predicts " + std::to_string(tasks) +
                                 " task(s); data.labels lists " +
                                 std::to_string(c.list("data.labels").size()));
  const std::uint64_t seed = static_cast<std::uint64_t>(c.integer("seed"));
  pipeline::Predictor pred(model_config(c, p.vocab.size()), seed, tasks, fc);
  nn::load_params(ck, pred.all_params(), pred.model.config().arch_hash());
  drop_unusable_rows(pred.model, p.data.molecules, io);
  const pipeline::DatasetSplit split =
      pipeline::make_split(p.data.molecules, fc.split, seed);
  pipeline::MetricsReport r;
  r.task = fc.task;
  pipeline::SeedResult s;
  s.seed = seed;
  s.valid = pipeline::evaluate(pred, p.data.molecules, split.valid, fc.reported());
  s.test = pipeline::evaluate(pred, p.data.molecules, split.test, fc.reported());
  r.seeds.push_back(s);
  std::ostringstream csv, text;
  pipeline::write_metrics_csv(csv, r, fc.reported());
  pipeline::write_metrics_text(text, r, fc.reported());
  write_file(dir / "eval.csv", csv.str());
  io.out << text.str();
  return 0;
}

/// Horizontal bar chart of view weights.
inline std::string attention_svg(const std::array<double, encoders::kNumViews> &a) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"360\" height=\"150\">\n";
  int row = 0;
  for (View v: encoders::kAllViews) {
    const double w = a[static_cast<int>(v)];
    const int y = 15 + 30 * row++;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<text x=\"5\" y=\"%d\" font-size=\"14\">%s</text>"
                  "<rect x=\"40\" y=\"%d\" width=\"%.1f\" height=\"18\" fill=\"#4a7ab5\"/>"
                  "<text x=\"%.1f\" y=\"%d\" font-size=\"12\">%.4f</text>\n",
                  y + 13, std::string(encoders::view_name(v)).c_str(), y, 250.0 * w,
                  45.0 + 250.0 * w, y + 13, w);
    os << buf;
  }
  os << "</svg>\n";
  return os.str();
}

/// Attention weights of a checkpoint over a whole dataset.
inline std::array<double, encoders::kNumViews>
dataset_alpha(pipeline::MultiViewModel &model,
              const std::vector<pipeline::Molecule> &mols) {
  std::vector<int> all(mols.size());
  for (std::size_t i = 0; i < mols.size(); ++i)
    all[i] = static_cast<int>(i);
  model.fusion().cache_alpha(pipeline::embed_molecules(model, mols, all));
  const auto a = *model.fusion().cached_alpha();
  model.fusion().clear_cached_alpha();
  return a;
}

inline int cmd_export_attention(const Config &c, Io io) {
  const nn::Checkpoint ck = nn::load_checkpoint(c.str("export.checkpoint"));
  if (!ck.has_prefix("fusion."))
    throw MissingFusionParams("checkpoint " + c.str("export.checkpoint") +
                              " holds no fusion parameters");
  const fs::path dir = prepare_run_dir(c, "export-attention");
  const pipeline::ViewMask mask = view_mask(c);
  Prepared p = prepare_dataset(c, manifest(c), mask[View::k3D], io);
  check_vocab(ck, p.vocab);
  pipeline::MultiViewModel model(model_config(c, p.vocab.size()),
                                 static_cast<std::uint64_t>(c.integer("seed")),
                                 mask);
  pipeline::load_model(model, ck);
  drop_unusable_rows(model, p.data.molecules, io);
  if (p.data.molecules.empty())
    throw EmptyBatch("no usable molecules to compute attention weights over");
  const auto alpha = dataset_alpha(model, p.data.molecules);
  std::ostringstream csv;
  fusion::write_alpha_csv(csv, alpha);
  write_file(dir / "attention.csv", csv.str());
  if (!c.str("export.svg").empty())
    write_file(c.str("export.svg"), attention_svg(alpha));
  io.out << csv.str();
  return 0;
}

inline int cmd_case_study(const Config &c, Io io) {
  const fs::path dir = prepare_run_dir(c, "case-study");
  const pipeline::ViewMask mask = view_mask(c);
  const featurize::BpeVocab vocab = featurize::load_vocab(c.str("tokenizer.vocab"));
  pipeline::MultiViewModel model(model_config(c, vocab.size()),
                                 static_cast<std::uint64_t>(c.integer("seed")), mask);
  if (!c.str("case_study.checkpoint").empty()) {
    const nn::Checkpoint ck = nn::load_checkpoint(c.str("case_study.checkpoint"));
    check_vocab(ck, vocab);
    pipeline::load_model(model, ck);
  } else {
    io.err << "case_study.checkpoint not set: probing freshly initialized encoders\n";
  }
  std::vector<pipeline::Molecule> chiral, rings;
  if (!c.str("case_study.chirality_csv").empty()) {
    pipeline::DatasetManifest m;
    m.csv = c.str("case_study.chirality_csv");
    m.name = fs::path(m.csv).stem().string();
    m.conformer_dir = c.str("case_study.chirality_conformer_dir");
    m.labels = { c.str("case_study.chirality_label") };
    chiral = prepare_dataset(c, m, mask[View::k3D], io).data.molecules;
    drop_unusable_rows(model, chiral, io);
  }
  if (!c.str("data.csv").empty()) {
    pipeline::DatasetManifest m = manifest(c);
    m.labels.clear();
    rings = prepare_dataset(c, m, mask[View::k3D], io).data.molecules;
    drop_unusable_rows(model, rings, io);
  }
  pipeline::ProbeConfig pc;
  pc.seed = static_cast<std::uint64_t>(c.integer("seed"));
  pc.ridge_lambda = c.real("case_study.ridge_lambda");
  pc.logistic_lambda = c.real("case_study.logistic_lambda");
  const auto rows = pipeline::case_study(model, chiral, rings, pc);
  std::ostringstream csv;
  pipeline::write_case_study_csv(csv, rows);
  write_file(dir / "case_study.csv", csv.str());
  io.out << csv.str();
  return 0;
}

inline int dispatch(const Options &o, Io io) {
  const Config c = resolve_config(o);
  if (o.dry_run) {
    print_plan(c, o.command, io);
    return 0;
  }
  if (o.command == "tokenize-train")
    return cmd_tokenize_train(c, io);
  if (o.command == "featurize")
    return cmd_featurize(c, io);
  if (o.command == "pretrain")
    return cmd_pretrain(c, io);
  if (o.command == "finetune")
    return cmd_finetune(c, io);
  if (o.command == "eval")
    return cmd_eval(c, io);
  if (o.command == "export-attention")
    return cmd_export_attention(c, io);
  if (o.command == "case-study")
    return cmd_case_study(c, io);
  throw ConfigError("unknown command " + o.command);
}

inline constexpr const char *kCommands[] = {
  "featurize", "pretrain", "finetune", "eval", "case-study", "export-attention",
  "tokenize-train",
};

/// Entry point shared by the executable and the tests. Exit status 0 on
/// success, 2 for usage or configuration errors, 1 for anything else.
inline int run(int argc, const char *const *argv, Io io) {
  CLI::App app { "moco: multi-view molecular representation pretraining" };
  app.require_subcommand(1, 1);
  Options o;
  for (const char *name: kCommands) {
    CLI::App *sub = app.add_subcommand(name);
    sub->add_option("--config", o.config, "flat key = value configuration file");
    sub->add_option("--seed", o.seed, "overrides the seed key");
    sub->add_flag("--dry-run", o.dry_run, "validate and print the plan only");
    sub->add_option("--views", o.views, "view subset, e.g. 2d,fp");
    sub->add_option("--fusion", o.fusion, "attention|mean|max|frozen");
    sub->add_option("--set", o.sets, "key=value override (repeatable)");
    sub->callback([&o, name] { o.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e, io.out, io.err) == 0 ? 0 : 2;
  }
  try {
    return dispatch(o, io);
  } catch (const ConfigError &e) {
    io.err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    io.err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace moco::cli
