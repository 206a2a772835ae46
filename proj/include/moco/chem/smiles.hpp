//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moco/chem/element.hpp"
#include "moco/chem/molgraph.hpp"
#include "moco/chem/rings.hpp"
#include "moco/error.hpp"

namespace moco::chem {

namespace detail {

struct BondSymbol {
  BondOrder order;
  BondDirection direction;
  std::size_t pos;
};

struct OpenRing {
  int atom;
  std::optional<BondSymbol> bond;
  std::size_t pos;
};

class SmilesParser {
public:
  explicit SmilesParser(std::string_view s): s_(s) { }

  MolGraph parse() {
    if (s_.empty())
      throw SyntaxError("empty SMILES", 0);

    while (i_ < s_.size()) {
      const char c = s_[i_];
      switch (c) {
      case '(':
        if (prev_ < 0)
          throw SyntaxError("branch opened before any atom", i_);
        if (pending_)
          throw SyntaxError("bond symbol before branch", pending_->pos);
        branches_.push_back({ prev_, i_, g_.num_atoms() });
        ++i_;
        break;
      case ')':
        if (branches_.empty())
          throw SyntaxError("unmatched ')'", i_);
        if (pending_)
          throw SyntaxError("dangling bond symbol", pending_->pos);
        if (branches_.back().atoms_at_open == g_.num_atoms())
          throw SyntaxError("empty branch", i_);
        prev_ = branches_.back().atom;
        branches_.pop_back();
        ++i_;
        break;
      case '-':
      case '=':
      case '#':
      case ':':
      case '/':
      case '\\':
        read_bond_symbol();
        break;
      case '$':
        throw UnsupportedFeature("quadruple bond", i_);
      case '.':
        if (pending_)
          throw SyntaxError("bond symbol before '.'", pending_->pos);
        if (prev_ < 0)
          throw SyntaxError("'.' without preceding atom", i_);
        prev_ = -1;
        ++i_;
        break;
      case '%':
      case '0':
      case '1':
      case '2':
      case '3':
      case '4':
      case '5':
      case '6':
      case '7':
      case '8':
      case '9':
        read_ring_closure();
        break;
      case '[':
        read_bracket_atom();
        break;
      case '*':
        throw UnsupportedFeature("wildcard atom", i_);
      case '>':
        throw UnsupportedFeature("reaction SMILES", i_);
      default:
        read_organic_atom();
        break;
      }
    }

    if (!branches_.empty())
      throw SyntaxError("unmatched '('", branches_.back().pos);
    if (!open_rings_.empty())
      throw SyntaxError("unclosed ring bond", open_rings_.begin()->second.pos);
    if (pending_)
      throw SyntaxError("dangling bond symbol", pending_->pos);
    if (prev_ < 0)
      throw SyntaxError("SMILES ends with '.'", s_.size() - 1);

    finish();
    return std::move(g_);
  }

private:
  struct Branch {
    int atom;
    std::size_t pos;
    int atoms_at_open;
  };

  void read_bond_symbol() {
    if (pending_)
      throw SyntaxError("consecutive bond symbols", i_);
    if (prev_ < 0)
      throw SyntaxError("bond symbol without preceding atom", i_);
    BondSymbol b { BondOrder::kSingle, BondDirection::kNone, i_ };
    switch (s_[i_]) {
    case '=':
      b.order = BondOrder::kDouble;
      break;
    case '#':
      b.order = BondOrder::kTriple;
      break;
    case ':':
      b.order = BondOrder::kAromatic;
      break;
    case '/':
      b.direction = BondDirection::kUp;
      break;
    case '\\':
      b.direction = BondDirection::kDown;
      break;
    default:
      break;
    }
    pending_ = b;
    ++i_;
  }

  void read_ring_closure() {
    const std::size_t start = i_;
    if (prev_ < 0)
      throw SyntaxError("ring bond without preceding atom", i_);
    int num;
    if (s_[i_] == '%') {
      if (i_ + 2 >= s_.size() || !std::isdigit(s_[i_ + 1])
          || !std::isdigit(s_[i_ + 2]))
        throw SyntaxError("'%' must be followed by two digits", i_);
      num = (s_[i_ + 1] - '0') * 10 + (s_[i_ + 2] - '0');
      i_ += 3;
    } else {
      num = s_[i_] - '0';
      ++i_;
    }

    auto it = open_rings_.find(num);
    if (it == open_rings_.end()) {
      open_rings_.emplace(num, OpenRing { prev_, pending_, start });
      pending_.reset();
      return;
    }

    OpenRing ring = it->second;
    open_rings_.erase(it);
    std::optional<BondSymbol> bond = ring.bond;
    if (pending_) {
      if (bond && bond->order != pending_->order)
        throw SyntaxError("conflicting ring-closure bond orders", pending_->pos);
      if (!bond)
        bond = pending_;
    }
    pending_.reset();
    if (ring.atom == prev_)
      throw SyntaxError("ring bond closes on the same atom", start);
    add_bond(ring.atom, prev_, bond, start);
  }

  int parse_int(int &value) {
    int digits = 0;
    value = 0;
    while (i_ < s_.size() && std::isdigit(s_[i_])) {
      value = value * 10 + (s_[i_] - '0');
      ++i_;
      ++digits;
    }
    return digits;
  }

  void read_bracket_atom() {
    const std::size_t open = i_;
    ++i_;
    const std::size_t close = s_.find(']', open);
    if (close == std::string_view::npos)
      throw SyntaxError("unclosed '['", open);

    Atom atom;
    int iso;
    if (parse_int(iso) > 0)
      atom.isotope = iso;

    if (i_ >= close)
      throw SyntaxError("missing element symbol", i_);
    if (s_[i_] == '*')
      throw UnsupportedFeature("wildcard atom", i_);

    // Aromatic two-letter symbols first, then one-letter aromatics and
    // ordinary element symbols (two-letter before one-letter).
    std::string_view rest = s_.substr(i_, close - i_);
    if (rest.starts_with("se") || rest.starts_with("as")) {
      set_element(atom, rest.substr(0, 2), true);
      i_ += 2;
    } else if (std::islower(static_cast<unsigned char>(rest[0]))) {
      const char lc = rest[0];
      if (lc != 'b' && lc != 'c' && lc != 'n' && lc != 'o' && lc != 'p'
          && lc != 's')
        throw SyntaxError("invalid aromatic symbol", i_);
      set_element(atom, rest.substr(0, 1), true);
      i_ += 1;
    } else if (std::isupper(static_cast<unsigned char>(rest[0]))) {
      if (rest.size() >= 2 && std::islower(static_cast<unsigned char>(rest[1]))
          && atomic_number(rest.substr(0, 2)) > 0) {
        set_element(atom, rest.substr(0, 2), false);
        i_ += 2;
      } else if (atomic_number(rest.substr(0, 1)) > 0) {
        set_element(atom, rest.substr(0, 1), false);
        i_ += 1;
      } else {
        throw SyntaxError("unknown element symbol", i_);
      }
    } else {
      throw SyntaxError("missing element symbol", i_);
    }

    if (i_ < close && s_[i_] == '@') {
      if (i_ + 1 < close && s_[i_ + 1] == '@') {
        atom.parity = Parity::kCW;
        i_ += 2;
      } else {
        atom.parity = Parity::kCCW;
        i_ += 1;
      }
      if (i_ < close && std::isupper(static_cast<unsigned char>(s_[i_]))
          && s_[i_] != 'H')
        throw UnsupportedFeature("extended chirality class", i_);
      if (i_ < close && s_[i_] == '@')
        throw UnsupportedFeature("extended chirality class", i_);
    }

    if (i_ < close && s_[i_] == 'H') {
      ++i_;
      int h;
      atom.implicit_h = parse_int(h) > 0 ? h : 1;
    }

    if (i_ < close && (s_[i_] == '+' || s_[i_] == '-')) {
      const char sign = s_[i_];
      const int unit = sign == '+' ? 1 : -1;
      ++i_;
      int mag;
      if (parse_int(mag) > 0) {
        atom.formal_charge = unit * mag;
      } else {
        mag = 1;
        while (i_ < close && s_[i_] == sign) {
          ++mag;
          ++i_;
        }
        atom.formal_charge = unit * mag;
      }
    }

    if (i_ < close && s_[i_] == ':') {
      ++i_;
      int cls;
      if (parse_int(cls) == 0)
        throw SyntaxError("atom class needs digits", i_);
    }

    if (i_ != close)
      throw SyntaxError("unexpected character in bracket atom", i_);
    i_ = close + 1;
    bracket_.push_back(true);
    push_atom(std::move(atom), open);
  }

  void read_organic_atom() {
    const std::size_t start = i_;
    const char c = s_[i_];
    Atom atom;
    if (c == 'C' && i_ + 1 < s_.size() && s_[i_ + 1] == 'l') {
      set_element(atom, "Cl", false);
      i_ += 2;
    } else if (c == 'B' && i_ + 1 < s_.size() && s_[i_ + 1] == 'r') {
      set_element(atom, "Br", false);
      i_ += 2;
    } else {
      switch (c) {
      case 'B':
      case 'C':
      case 'N':
      case 'O':
      case 'P':
      case 'S':
      case 'F':
      case 'I':
        set_element(atom, std::string_view(&s_[i_], 1), false);
        break;
      case 'b':
      case 'c':
      case 'n':
      case 'o':
      case 'p':
      case 's':
        set_element(atom, std::string_view(&s_[i_], 1), true);
        break;
      default:
        if (std::isalpha(static_cast<unsigned char>(c)))
          throw UnsupportedFeature(
              std::string("element outside the organic subset must be "
                          "bracketed: '")
                  + c + "'",
              i_);
        throw SyntaxError(std::string("unexpected character '") + c + "'", i_);
      }
      i_ += 1;
    }
    bracket_.push_back(false);
    push_atom(std::move(atom), start);
  }

  static void set_element(Atom &atom, std::string_view sym, bool aromatic) {
    std::string canon(sym);
    canon[0] = static_cast<char>(std::toupper(canon[0]));
    atom.element = canon;
    atom.atomic_number = atomic_number(canon);
    atom.aromatic = aromatic;
  }

  void push_atom(Atom atom, std::size_t pos) {
    atom.index = g_.num_atoms();
    g_.atoms.push_back(std::move(atom));
    const int idx = g_.num_atoms() - 1;
    if (prev_ >= 0) {
      add_bond(prev_, idx, pending_, pos);
    } else if (pending_) {
      throw SyntaxError("bond symbol without preceding atom", pending_->pos);
    }
    pending_.reset();
    prev_ = idx;
  }

  void add_bond(int u, int v, const std::optional<BondSymbol> &sym,
                std::size_t pos) {
    for (const Bond &b: g_.bonds) {
      if ((b.a == u && b.b == v) || (b.a == v && b.b == u))
        throw SyntaxError("duplicate bond between the same atoms", pos);
    }
    Bond bond { u, v, BondOrder::kSingle, BondDirection::kNone };
    const bool both_aromatic = g_.atoms[u].aromatic && g_.atoms[v].aromatic;
    if (sym) {
      bond.order = sym->order;
      bond.direction = sym->direction;
      if (bond.order == BondOrder::kAromatic && !both_aromatic)
        throw UnsupportedFeature("aromatic bond between non-aromatic atoms",
                                 sym->pos);
      implicit_.push_back(false);
    } else {
      bond.order = both_aromatic ? BondOrder::kAromatic : BondOrder::kSingle;
      implicit_.push_back(true);
    }
    g_.bonds.push_back(bond);
  }

  void finish() {
    g_.source_smiles = std::string(s_);
    g_.build_adjacency();
    g_.rings = find_sssr(g_);

    // An unspecified bond between aromatic atoms outside any ring is a
    // single bond (e.g. the biaryl link written without '-').
    const std::vector<bool> ring_bond = g_.ring_bonds();
    for (int b = 0; b < g_.num_bonds(); ++b) {
      if (implicit_[b] && !ring_bond[b]
          && g_.bonds[b].order == BondOrder::kAromatic)
        g_.bonds[b].order = BondOrder::kSingle;
    }

    for (int a = 0; a < g_.num_atoms(); ++a) {
      if (bracket_[a])
        continue;
      Atom &atom = g_.atoms[a];
      int sum = 0;
      for (const Neighbor &n: g_.neighbors(a))
        sum += bond_valence(g_.bonds[n.bond].order);
      const auto valences = default_valences(atom.atomic_number);
      if (valences.empty())
        continue;
      if (atom.aromatic) {
        // One valence unit is taken by the aromatic system; only the
        // lowest normal valence applies.
        atom.implicit_h = std::max(0, valences[0] - (sum + 1));
        continue;
      }
      atom.implicit_h = 0;
      for (int v: valences) {
        if (v >= sum) {
          atom.implicit_h = v - sum;
          break;
        }
      }
    }
  }

  std::string_view s_;
  std::size_t i_ = 0;
  MolGraph g_;
  int prev_ = -1;
  std::optional<BondSymbol> pending_;
  std::vector<Branch> branches_;
  std::map<int, OpenRing> open_rings_;
  std::vector<bool> bracket_;
  std::vector<bool> implicit_;
};

}  // namespace detail

/// Parses an organic-subset SMILES string into a molecular graph with
/// resolved ring closures, notation-derived aromaticity, implicit
/// hydrogens and SSSR.
///
/// Throws SyntaxError for malformed input and UnsupportedFeature for
/// grammar outside the subset (wildcards, reactions, extended
/// chirality classes, quadruple bonds).
inline MolGraph parse_smiles(std::string_view s) {
  return detail::SmilesParser(s).parse();
}

/// Number of SSSR rings whose atoms are all aromatic and whose ring bonds
/// are all aromatic.
inline int count_aromatic_rings(const MolGraph &g) {
  int count = 0;
  for (const auto &ring: g.rings) {
    bool aromatic = true;
    for (std::size_t k = 0; k < ring.size() && aromatic; ++k) {
      const int bond = g.find_bond(ring[k], ring[(k + 1) % ring.size()]);
      aromatic = g.atoms[ring[k]].aromatic && bond >= 0
                 && g.bonds[bond].order == BondOrder::kAromatic;
    }
    count += aromatic ? 1 : 0;
  }
  return count;
}

}  // namespace moco::chem
