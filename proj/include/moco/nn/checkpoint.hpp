//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "moco/error.hpp"
#include "moco/nn/layers.hpp"

namespace moco::nn {

// Text container: a version header, the architecture hash, free-form
// metadata lines, then one block per parameter with its shape and values
// in hexadecimal floating point (exact round trip).
//
//   moco-checkpoint 1
//   config <hash>
//   meta <key> <value>
//   param <name> <rows> <cols>
//   <values, row-major>
//   end

constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::string config_hash;
  std::map<std::string, std::string> meta;
  std::map<std::string, Mat> params;

  bool has_prefix(const std::string &prefix) const {
    auto it = params.lower_bound(prefix);
    return it != params.end() && it->first.compare(0, prefix.size(), prefix) == 0;
  }
};

inline Checkpoint make_checkpoint(const ParamList &params,
                                  std::string config_hash) {
  Checkpoint c;
  c.config_hash = std::move(config_hash);
  for (const NamedParam &p: params)
    c.params[p.name] = p.tensor.value();
  return c;
}

inline void write_checkpoint(std::ostream &os, const Checkpoint &c) {
  os << "moco-checkpoint " << kCheckpointVersion << '\n'
     << "config " << c.config_hash << '\n';
  for (const auto &[k, v]: c.meta)
    os << "meta " << k << ' ' << v << '\n';
  char buf[40];
  for (const auto &[name, m]: c.params) {
    os << "param " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%a", m(i, j));
        os << (j ? " " : "") << buf;
      }
      os << '\n';
    }
  }
  os << "end\n";
}

inline Checkpoint read_checkpoint(std::istream &is) {
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "moco-checkpoint")
    throw IncompatibleCheckpoint("not a moco checkpoint");
  if (version != kCheckpointVersion)
    throw IncompatibleCheckpoint("unsupported checkpoint version " +
                                 std::to_string(version));
  Checkpoint c;
  while (is >> tag) {
    if (tag == "end")
      return c;
    if (tag == "config") {
      is >> c.config_hash;
    } else if (tag == "meta") {
      std::string key, value;
      is >> key;
      std::getline(is, value);
      if (!value.empty() && value.front() == ' ')
        value.erase(0, 1);
      c.meta[key] = value;
    } else if (tag == "param") {
      std::string name;
      Eigen::Index rows = 0, cols = 0;
      if (!(is >> name >> rows >> cols) || rows < 0 || cols < 0)
        throw IncompatibleCheckpoint("malformed parameter header");
      Mat m(rows, cols);
      std::string tok;
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        if (!(is >> tok))
          throw IncompatibleCheckpoint("truncated parameter " + name);
        char *end = nullptr;
        m.data()[i] = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0')
          throw IncompatibleCheckpoint("bad value in parameter " + name);
      }
      c.params[name] = std::move(m);
    } else {
      throw IncompatibleCheckpoint("unknown checkpoint record '" + tag + "'");
    }
  }
  throw IncompatibleCheckpoint("checkpoint lacks an end marker");
}

inline void save_checkpoint(const std::string &path, const Checkpoint &c) {
  std::ofstream os(path);
  if (!os)
    throw Error("cannot write checkpoint " + path);
  write_checkpoint(os, c);
  if (!os)
    throw Error("failed writing checkpoint " + path);
}

inline Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream is(path);
  if (!is)
    throw MissingCheckpoint("checkpoint not found: " + path);
  return read_checkpoint(is);
}

/// Copies checkpoint values into params. Every listed parameter must be
/// present with the same shape, and the architecture hash must agree.
inline void load_params(const Checkpoint &c, const ParamList &params,
                        const std::string &expected_hash) {
  if (c.config_hash != expected_hash)
    throw IncompatibleCheckpoint("checkpoint architecture " + c.config_hash +
                                 " differs from configured " + expected_hash);
  for (const NamedParam &p: params) {
    auto it = c.params.find(p.name);
    if (it == c.params.end())
      throw IncompatibleCheckpoint("checkpoint lacks parameter " + p.name);
    if (it->second.rows() != p.tensor.rows() ||
        it->second.cols() != p.tensor.cols())
      throw IncompatibleCheckpoint(
          "shape mismatch for " + p.name + ": checkpoint " +
          std::to_string(it->second.rows()) + "x" +
          std::to_string(it->second.cols()) + ", model " +
          std::to_string(p.tensor.rows()) + "x" +
          std::to_string(p.tensor.cols()));
  }
  for (const NamedParam &p: params)
    p.tensor.mutable_value() = c.params.at(p.name);
}

}  // namespace moco::nn
