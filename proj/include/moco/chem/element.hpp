//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <span>
#include <string_view>

namespace moco::chem {

inline constexpr std::array<std::string_view, 119> kElementSymbols = {
  "*",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na",
  "Mg", "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",
  "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br",
  "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag",
  "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
  "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu",
  "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi",
  "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am",
  "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh",
  "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
};

/// Atomic number for an element symbol, or 0 when the symbol is unknown.
constexpr int atomic_number(std::string_view symbol) {
  for (std::size_t z = 1; z < kElementSymbols.size(); ++z) {
    if (kElementSymbols[z] == symbol)
      return static_cast<int>(z);
  }
  return 0;
}

constexpr std::string_view element_symbol(int z) {
  if (z <= 0 || z >= static_cast<int>(kElementSymbols.size()))
    return kElementSymbols[0];
  return kElementSymbols[z];
}

namespace detail {
inline constexpr int kB[] = { 3 }, kC[] = { 4 }, kN[] = { 3 }, kO[] = { 2 },
                     kP[] = { 3, 5 }, kS[] = { 2, 4, 6 }, kHal[] = { 1 };
}  // namespace detail

/// Default valences used to derive implicit hydrogens on organic-subset
/// atoms. Empty for elements outside the subset.
constexpr std::span<const int> default_valences(int z) {
  using namespace detail;
  switch (z) {
  case 5:
    return kB;
  case 6:
    return kC;
  case 7:
    return kN;
  case 8:
    return kO;
  case 15:
    return kP;
  case 16:
    return kS;
  case 9:
  case 17:
  case 35:
  case 53:
    return kHal;
  default:
    return {};
  }
}

}  // namespace moco::chem
