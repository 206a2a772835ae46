//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <set>
#include <vector>

#include "moco/chem/molgraph.hpp"

namespace moco::chem {

namespace detail {

// Edge-incidence vector of a cycle over GF(2).
class BitRow {
public:
  explicit BitRow(std::size_t nbits): words_((nbits + 63) / 64, 0) { }

  void flip(std::size_t i) { words_[i / 64] ^= std::uint64_t { 1 } << (i % 64); }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }

  void xor_with(const BitRow &o) {
    for (std::size_t k = 0; k < words_.size(); ++k)
      words_[k] ^= o.words_[k];
  }

  long lowest() const {
    for (std::size_t k = 0; k < words_.size(); ++k) {
      if (words_[k] != 0)
        return static_cast<long>(k * 64 + __builtin_ctzll(words_[k]));
    }
    return -1;
  }

private:
  std::vector<std::uint64_t> words_;
};

struct Candidate {
  std::vector<int> cycle;   // atoms in traversal order
  std::vector<int> sorted;  // same atoms, ascending
};

// Rotates/reflects a cycle so it starts at its smallest atom and continues
// toward the smaller of its two neighbors.
inline std::vector<int> orient_cycle(std::vector<int> cycle) {
  auto it = std::min_element(cycle.begin(), cycle.end());
  std::rotate(cycle.begin(), it, cycle.end());
  if (cycle.size() > 2 && cycle.back() < cycle[1])
    std::reverse(cycle.begin() + 1, cycle.end());
  return cycle;
}

// Shortest-path tree from root; neighbors are expanded in ascending atom
// order so paths are deterministic.
inline void bfs_tree(const MolGraph &g, int root, std::vector<int> &parent,
                     std::vector<int> &dist) {
  parent.assign(g.num_atoms(), -1);
  dist.assign(g.num_atoms(), -1);
  std::deque<int> queue { root };
  dist[root] = 0;
  std::vector<int> nbrs;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    nbrs.clear();
    for (const Neighbor &n: g.neighbors(u))
      nbrs.push_back(n.atom);
    std::sort(nbrs.begin(), nbrs.end());
    for (int v: nbrs) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        parent[v] = u;
        queue.push_back(v);
      }
    }
  }
}

}  // namespace detail

/// Smallest set of smallest rings as a minimum cycle basis.
///
/// Candidates are Horton cycles (root-to-edge shortest-path loops), which
/// always contain a minimum cycle basis. They are ordered by size, then by
/// the ascending atom list, and accepted greedily when independent of the
/// already accepted cycles over GF(2). The result size is always
/// |bonds| - |atoms| + components.
inline std::vector<std::vector<int>> find_sssr(const MolGraph &g) {
  const int n = g.num_atoms();
  const int m = g.num_bonds();
  const int target = m - n + g.num_components();
  if (target <= 0)
    return {};

  std::vector<detail::Candidate> candidates;
  std::set<std::vector<int>> seen;
  std::vector<int> parent, dist;
  for (int root = 0; root < n; ++root) {
    if (g.degree(root) < 2)
      continue;
    detail::bfs_tree(g, root, parent, dist);
    for (const Bond &bond: g.bonds) {
      int u = bond.a, v = bond.b;
      if (dist[u] < 0 || dist[v] < 0)
        continue;
      if (parent[u] == v || parent[v] == u)
        continue;
      std::vector<int> pu, pv;
      for (int x = u; x >= 0; x = parent[x])
        pu.push_back(x);
      for (int x = v; x >= 0; x = parent[x])
        pv.push_back(x);
      // Simple cycle only when the two paths meet solely at the root.
      std::vector<int> su(pu.begin(), pu.end() - 1), sv(pv.begin(), pv.end() - 1);
      std::sort(su.begin(), su.end());
      std::sort(sv.begin(), sv.end());
      std::vector<int> common;
      std::set_intersection(su.begin(), su.end(), sv.begin(), sv.end(),
                            std::back_inserter(common));
      if (!common.empty())
        continue;
      std::vector<int> cycle(pu.rbegin(), pu.rend());  // root .. u
      cycle.insert(cycle.end(), pv.begin(), pv.end() - 1);  // v .. (root)
      cycle = detail::orient_cycle(std::move(cycle));
      if (!seen.insert(cycle).second)
        continue;
      std::vector<int> sorted = cycle;
      std::sort(sorted.begin(), sorted.end());
      candidates.push_back({ std::move(cycle), std::move(sorted) });
    }
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const detail::Candidate &x, const detail::Candidate &y) {
                     if (x.cycle.size() != y.cycle.size())
                       return x.cycle.size() < y.cycle.size();
                     if (x.sorted != y.sorted)
                       return x.sorted < y.sorted;
                     return x.cycle < y.cycle;
                   });

  // Gaussian elimination basis keyed by pivot bit.
  std::vector<std::pair<long, detail::BitRow>> basis;
  std::vector<std::vector<int>> rings;
  for (const detail::Candidate &c: candidates) {
    detail::BitRow row(m);
    for (std::size_t k = 0; k < c.cycle.size(); ++k)
      row.flip(g.find_bond(c.cycle[k], c.cycle[(k + 1) % c.cycle.size()]));
    for (const auto &[pivot, brow]: basis) {
      if (row.test(pivot))
        row.xor_with(brow);
    }
    long pivot = row.lowest();
    if (pivot < 0)
      continue;
    for (auto &[p, brow]: basis) {
      if (brow.test(pivot))
        brow.xor_with(row);
    }
    basis.emplace_back(pivot, row);
    rings.push_back(c.cycle);
    if (static_cast<int>(rings.size()) == target)
      break;
  }
  return rings;
}

}  // namespace moco::chem
