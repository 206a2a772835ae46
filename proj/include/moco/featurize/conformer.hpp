//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "moco/chem/element.hpp"
#include "moco/chem/molgraph.hpp"
#include "moco/error.hpp"

namespace moco::featurize {

using Positions = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// One XYZ frame: element symbols in file order and coordinates in Å.
struct Conformer {
  std::vector<std::string> elements;
  Positions positions;

  int num_atoms() const { return static_cast<int>(elements.size()); }
};

namespace detail {

inline bool blank(const std::string &line) {
  for (char c: line) {
    if (!std::isspace(static_cast<unsigned char>(c)))
      return false;
  }
  return true;
}

inline bool parse_atom_line(const std::string &line, std::string &el,
                            double xyz[3]) {
  std::istringstream ls(line);
  return static_cast<bool>(ls >> el >> xyz[0] >> xyz[1] >> xyz[2]);
}

inline bool parse_count(const std::string &line, int &n) {
  std::istringstream ls(line);
  std::string extra;
  return (ls >> n) && !(ls >> extra) && n >= 0;
}

}  // namespace detail

/// Reads every frame of a (possibly multi-frame) XYZ stream.
inline std::vector<Conformer> read_xyz(std::istream &is,
                                       const std::string &where = "xyz") {
  std::vector<Conformer> frames;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string &msg) {
    throw FormatError(where + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::blank(line))
      continue;
    int n = 0;
    std::string el;
    double xyz[3];
    if (!detail::parse_count(line, n)) {
      if (!frames.empty() && detail::parse_atom_line(line, el, xyz))
        throw CountMismatch(where + ":" + std::to_string(lineno) +
                            ": more atom lines than the declared count " +
                            std::to_string(frames.back().num_atoms()));
      fail("expected an atom count");
    }
    if (!std::getline(is, line)) {
      ++lineno;
      if (n == 0) {
        frames.emplace_back();
        break;
      }
      throw CountMismatch(where + ": declared " + std::to_string(n) +
                          " atoms, found 0");
    }
    ++lineno;
    Conformer c;
    c.positions.resize(n, 3);
    for (int k = 0; k < n; ++k) {
      if (!std::getline(is, line) || detail::blank(line))
        throw CountMismatch(where + ": declared " + std::to_string(n) +
                            " atoms, found " + std::to_string(k));
      ++lineno;
      if (!detail::parse_atom_line(line, el, xyz)) {
        int dummy;
        if (detail::parse_count(line, dummy))
          throw CountMismatch(where + ": declared " + std::to_string(n) +
                              " atoms, found " + std::to_string(k));
        fail("malformed atom line '" + line + "'");
      }
      c.elements.push_back(el);
      c.positions.row(k) << xyz[0], xyz[1], xyz[2];
    }
    frames.push_back(std::move(c));
  }
  if (frames.empty())
    throw FormatError(where + ": no frames");
  return frames;
}

inline std::vector<Conformer> load_conformers(const std::string &path) {
  std::ifstream is(path);
  if (!is)
    throw FormatError("cannot open conformer file " + path);
  return read_xyz(is, path);
}

/// First frame of an XYZ file.
inline Conformer load_conformer(const std::string &path) {
  return load_conformers(path).front();
}

namespace detail {

inline bool same_element(const std::string &file_el, const std::string &el) {
  if (file_el.size() != el.size())
    return false;
  for (std::size_t i = 0; i < el.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(file_el[i])) !=
        std::tolower(static_cast<unsigned char>(el[i])))
      return false;
  }
  return true;
}

}  // namespace detail

/// Row-aligns a conformer with the graph atoms. A conformer that lists
/// hydrogens the graph keeps implicit is reduced to its heavy atoms first.
inline Positions align_conformer(const chem::MolGraph &g, const Conformer &c) {
  auto matches = [&](const std::vector<int> &rows) {
    if (static_cast<int>(rows.size()) != g.num_atoms())
      return false;
    for (int a = 0; a < g.num_atoms(); ++a) {
      if (!detail::same_element(c.elements[rows[a]], g.atoms[a].element))
        return false;
    }
    return true;
  };
  std::vector<int> rows;
  for (int k = 0; k < c.num_atoms(); ++k)
    rows.push_back(k);
  if (!matches(rows)) {
    rows.clear();
    for (int k = 0; k < c.num_atoms(); ++k) {
      if (!detail::same_element(c.elements[k], "H"))
        rows.push_back(k);
    }
    if (!matches(rows))
      throw AlignmentError("conformer with " + std::to_string(c.num_atoms()) +
                           " atoms does not match the " +
                           std::to_string(g.num_atoms()) + "-atom graph");
  }
  Positions out(g.num_atoms(), 3);
  for (int a = 0; a < g.num_atoms(); ++a)
    out.row(a) = c.positions.row(rows[a]);
  return out;
}

}  // namespace moco::featurize
