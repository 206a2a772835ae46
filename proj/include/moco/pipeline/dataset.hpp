//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moco/chem.hpp"
#include "moco/error.hpp"
#include "moco/featurize.hpp"

namespace moco::pipeline {

enum class TaskKind { kClassify, kRegress };

constexpr std::string_view task_name(TaskKind t) {
  return t == TaskKind::kClassify ? "classify" : "regress";
}

struct DatasetManifest {
  std::string name;
  std::string csv;
  std::string conformer_dir;  // empty when no conformers are supplied
  TaskKind task = TaskKind::kClassify;
  std::vector<std::string> labels;  // empty: no label columns (pretraining)
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name)
        return static_cast<int>(i);
    }
    return -1;
  }
};

/// Splits one CSV record; double quotes group fields and "" escapes a quote.
inline std::vector<std::string> split_csv_line(std::string_view line,
                                               const std::string &where) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  if (quoted)
    throw FormatError(where + ": unterminated quote");
  return out;
}

inline CsvTable read_csv(std::istream &is, const std::string &where) {
  CsvTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    std::vector<std::string> fields =
        split_csv_line(line, where + ":" + std::to_string(lineno));
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw FormatError(where + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(t.header.size()) + " fields, found " +
                        std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
  }
  return t;
}

inline CsvTable read_csv_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open dataset " + path);
  return read_csv(in, path);
}

struct Record {
  int row = 0;  // 0-based data row, also names the conformer file
  std::string smiles;
  std::vector<double> labels;  // NaN marks a missing label
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<Record> records;

  std::size_t size() const { return records.size(); }
};

inline double parse_label(const std::string &text, TaskKind task,
                          const std::string &where) {
  if (text.empty() || text == "nan" || text == "NaN" || text == "NA")
    return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used != text.size() || !std::isfinite(v))
    throw DataError(where + ": label '" + text + "' is not numeric");
  if (task == TaskKind::kClassify && v != 0.0 && v != 1.0)
    throw DataError(where + ": classification label '" + text +
                    "' is not 0 or 1");
  return v;
}

inline Dataset load_dataset(const DatasetManifest &m) {
  const CsvTable t = read_csv_file(m.csv);
  Dataset d;
  d.manifest = m;
  if (t.header.empty())
    return d;
  const int smiles_col = t.column("smiles");
  if (smiles_col < 0)
    throw DataError(m.csv + ": no 'smiles' column");
  std::vector<int> label_cols;
  for (const std::string &l: m.labels) {
    const int c = t.column(l);
    if (c < 0)
      throw DataError(m.csv + ": no label column '" + l + "'");
    label_cols.push_back(c);
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    Record rec;
    rec.row = static_cast<int>(r);
    rec.smiles = t.rows[r][smiles_col];
    const std::string where = m.csv + " row " + std::to_string(r);
    for (int c: label_cols)
      rec.labels.push_back(parse_label(t.rows[r][c], m.task, where));
    d.records.push_back(std::move(rec));
  }
  return d;
}

/// A featurized record. Each frame carries one conformer's coordinates;
/// a molecule without conformers has a single frame without positions.
struct Molecule {
  int row = 0;
  std::string smiles;
  chem::MolGraph graph;
  std::vector<double> labels;
  std::vector<featurize::MolViews> frames;
};

inline std::string conformer_path(const std::string &dir, int row) {
  return (std::filesystem::path(dir) / (std::to_string(row) + ".xyz")).string();
}

/// Failures of any step are rethrown as DataError naming the row.
inline chem::MolGraph parse_record(const Record &r) {
  try {
    return chem::parse_smiles(r.smiles);
  } catch (const Error &e) {
    throw DataError("row " + std::to_string(r.row) + ": " + e.what());
  }
}

/// Copies the position-free views once per conformer in the file, or
/// keeps them as the only frame when no conformer is needed or found.
inline std::vector<featurize::MolViews>
attach_conformers(const featurize::MolViews &base, const chem::MolGraph &g,
                  int row, const std::string &conformer_dir, bool required) {
  const std::string path =
      conformer_dir.empty() ? std::string() : conformer_path(conformer_dir, row);
  if (path.empty() || !std::filesystem::exists(path)) {
    if (required)
      throw DataError("row " + std::to_string(row) + ": no conformer" +
                      (path.empty() ? std::string(" directory configured")
                                    : " file " + path));
    return { base };
  }
  std::vector<featurize::MolViews> frames;
  try {
    for (const featurize::Conformer &c: featurize::load_conformers(path)) {
      frames.push_back(base);
      frames.back().positions = featurize::align_conformer(g, c);
    }
  } catch (const Error &e) {
    throw DataError("row " + std::to_string(row) + ": " + e.what());
  }
  if (frames.empty())
    throw DataError("row " + std::to_string(row) + ": empty conformer file " + path);
  return frames;
}

inline Molecule featurize_record(const Record &r, const featurize::BpeVocab &vocab,
                                 const featurize::FeaturizerConfig &cfg,
                                 const std::string &conformer_dir,
                                 bool require_positions) {
  Molecule m;
  m.row = r.row;
  m.smiles = r.smiles;
  m.labels = r.labels;
  m.graph = parse_record(r);
  const featurize::MolViews base =
      featurize::build_views(m.graph, std::nullopt, vocab, cfg);
  m.frames = attach_conformers(base, m.graph, r.row, conformer_dir,
                               require_positions);
  return m;
}

struct SkippedRecord {
  int row;
  std::string reason;
};

struct FeaturizedSet {
  std::vector<Molecule> molecules;
  std::vector<SkippedRecord> skipped;
};

/// Featurizes every record, collecting unfeaturizable ones in `skipped`.
inline FeaturizedSet featurize_dataset(const Dataset &d,
                                       const featurize::BpeVocab &vocab,
                                       const featurize::FeaturizerConfig &cfg,
                                       bool require_positions) {
  FeaturizedSet out;
  for (const Record &r: d.records) {
    try {
      out.molecules.push_back(featurize_record(r, vocab, cfg,
                                               d.manifest.conformer_dir,
                                               require_positions));
    } catch (const DataError &e) {
      out.skipped.push_back({ r.row, e.what() });
    }
  }
  return out;
}

inline std::vector<std::string> scaffold_keys(const std::vector<Molecule> &mols) {
  std::vector<std::string> keys;
  for (const Molecule &m: mols)
    keys.push_back(chem::scaffold_key(m.graph));
  return keys;
}

}  // namespace moco::pipeline
