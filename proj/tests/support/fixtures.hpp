//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifndef MOCO_TEST_DATA_DIR
#error "MOCO_TEST_DATA_DIR must point at tests/data"
#endif

namespace moco::testing {

inline std::string data_path(const std::string &name) {
  return std::string(MOCO_TEST_DATA_DIR) + "/" + name;
}

inline std::vector<std::string> read_lines(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open fixture " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (!line.empty())
      lines.push_back(line);
  }
  return lines;
}

inline std::vector<std::string> corpus_smiles() {
  return read_lines(data_path("molecules.smi"));
}

struct ReferenceAtom {
  std::string element;
  int charge;
  int total_h;
  bool aromatic;
  std::string parity;
  int isotope;
};

struct ReferenceBond {
  int a, b;
  std::string order;
};

struct ReferenceMolecule {
  std::string smiles;
  int num_atoms = 0, num_bonds = 0, num_rings = 0;
  std::vector<ReferenceAtom> atoms;
  std::vector<ReferenceBond> bonds;
};

/// Reads the frozen reference-toolkit dump (see tests/data/make_fixtures.py).
inline std::vector<ReferenceMolecule> reference_dump() {
  std::ifstream in(data_path("parser_reference.txt"));
  if (!in)
    throw std::runtime_error("cannot open parser reference dump");
  std::vector<ReferenceMolecule> mols;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "MOL") {
      mols.emplace_back();
      ls >> mols.back().smiles;
    } else if (tag == "COUNTS") {
      ls >> mols.back().num_atoms >> mols.back().num_bonds
          >> mols.back().num_rings;
    } else if (tag == "A") {
      int idx, arom;
      ReferenceAtom a;
      ls >> idx >> a.element >> a.charge >> a.total_h >> arom >> a.parity
          >> a.isotope;
      a.aromatic = arom != 0;
      mols.back().atoms.push_back(a);
    } else if (tag == "B") {
      ReferenceBond b;
      ls >> b.a >> b.b >> b.order;
      mols.back().bonds.push_back(b);
    }
  }
  return mols;
}

}  // namespace moco::testing
