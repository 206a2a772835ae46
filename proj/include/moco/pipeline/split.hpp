//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "moco/util/hash.hpp"
#include "moco/util/rng.hpp"

namespace moco::pipeline {

enum class SplitMethod { kScaffold, kRandom };

constexpr std::string_view split_name(SplitMethod m) {
  return m == SplitMethod::kScaffold ? "scaffold" : "random";
}

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
};

struct DatasetSplit {
  std::vector<int> train, valid, test;
  std::uint64_t seed = 0;
  SplitMethod method = SplitMethod::kScaffold;
  std::vector<std::string> warnings;

  std::size_t size() const { return train.size() + valid.size() + test.size(); }
  bool operator==(const DatasetSplit &o) const {
    return train == o.train && valid == o.valid && test == o.test;
  }
};

/// Groups molecule indices by scaffold key and fills train, then valid,
/// then test. Groups go largest first. Seed 0 orders equal-size groups by
/// key; other seeds order them by a seeded hash of the key. A group is
/// placed in the first split whose target it does not overflow, else test;
/// an oversized first group still goes to train, with a warning.
inline DatasetSplit scaffold_split(const std::vector<std::string> &scaffold_keys,
                                   std::uint64_t seed,
                                   const SplitRatios &ratios = {}) {
  std::map<std::string, std::vector<int>> groups;
  for (std::size_t i = 0; i < scaffold_keys.size(); ++i)
    groups[scaffold_keys[i]].push_back(static_cast<int>(i));

  struct Group {
    std::uint64_t tie;
    const std::string *key;
    const std::vector<int> *members;
  };
  std::vector<Group> order;
  for (const auto &[key, members]: groups) {
    const std::uint64_t tie =
        seed == 0 ? 0 : splitmix64(seed ^ Fnv1a64().bytes(key).value());
    order.push_back({ tie, &key, &members });
  }
  std::sort(order.begin(), order.end(), [](const Group &a, const Group &b) {
    if (a.members->size() != b.members->size())
      return a.members->size() > b.members->size();
    if (a.tie != b.tie)
      return a.tie < b.tie;
    return *a.key < *b.key;
  });

  const double n = static_cast<double>(scaffold_keys.size());
  const auto train_target = static_cast<std::size_t>(std::llround(ratios.train * n));
  const auto valid_target = static_cast<std::size_t>(std::llround(ratios.valid * n));

  DatasetSplit s;
  s.seed = seed;
  s.method = SplitMethod::kScaffold;
  for (std::size_t g = 0; g < order.size(); ++g) {
    const std::vector<int> &m = *order[g].members;
    std::vector<int> *dst = &s.test;
    if (s.train.size() + m.size() <= train_target) {
      dst = &s.train;
    } else if (g == 0) {
      dst = &s.train;
      s.warnings.push_back("largest scaffold group (" + std::to_string(m.size()) +
                           " molecules) exceeds the train share; placed in train");
    } else if (s.valid.size() + m.size() <= valid_target) {
      dst = &s.valid;
    }
    dst->insert(dst->end(), m.begin(), m.end());
  }
  for (auto *v: { &s.train, &s.valid, &s.test })
    std::sort(v->begin(), v->end());
  if (s.valid.empty() || s.test.empty())
    s.warnings.push_back("scaffold split left an empty valid or test subset");
  return s;
}

/// Seeded shuffle cut at the rounded ratios.
inline DatasetSplit random_split(std::size_t n, std::uint64_t seed,
                                 const SplitRatios &ratios = {}) {
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i)
    idx[i] = static_cast<int>(i);
  Rng rng(seed, "split.random");
  rng.shuffle(idx);
  const double dn = static_cast<double>(n);
  const auto n_train = static_cast<std::size_t>(std::llround(ratios.train * dn));
  const auto n_valid = std::min(
      n - n_train, static_cast<std::size_t>(std::llround(ratios.valid * dn)));
  DatasetSplit s;
  s.seed = seed;
  s.method = SplitMethod::kRandom;
  s.train.assign(idx.begin(), idx.begin() + static_cast<long>(n_train));
  s.valid.assign(idx.begin() + static_cast<long>(n_train),
                 idx.begin() + static_cast<long>(n_train + n_valid));
  s.test.assign(idx.begin() + static_cast<long>(n_train + n_valid), idx.end());
  for (auto *v: { &s.train, &s.valid, &s.test })
    std::sort(v->begin(), v->end());
  return s;
}

}  // namespace moco::pipeline
