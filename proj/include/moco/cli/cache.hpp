//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "moco/error.hpp"
#include "moco/featurize.hpp"
#include "moco/pipeline/dataset.hpp"
#include "moco/util/hash.hpp"
#include "moco/util/rng.hpp"

namespace moco::cli {

/// Hash of everything that changes position-free views: fingerprint
/// settings and the tokenizer vocabulary.
inline std::string featurizer_hash(const featurize::FeaturizerConfig &cfg,
                                   const featurize::BpeVocab &vocab) {
  std::ostringstream os;
  os << "fp_bits=" << cfg.fp_bits << ";fp_radius=" << cfg.fp_radius << ";vocab=";
  featurize::write_vocab(os, vocab);
  return to_hex(Fnv1a64().bytes(os.str()).value());
}

/// One-line text form of position-free views; adjacency is rebuilt from
/// the bond list.
inline std::string serialize_views(const featurize::MolViews &v) {
  std::ostringstream os;
  os << v.num_atoms << '|';
  for (const featurize::AtomFeature &a: v.atom_feats)
    os << a.type << ',' << a.chirality << ' ';
  os << '|';
  for (const featurize::BondFeature &b: v.bond_feats)
    os << b.a << ',' << b.b << ',' << b.type << ',' << b.direction << ' ';
  os << '|' << v.fingerprint.size() << ':';
  for (std::size_t i = 0; i < v.fingerprint.size(); ++i) {
    if (v.fingerprint[i])
      os << i << ' ';
  }
  os << '|';
  for (int t: v.tokens)
    os << t << ' ';
  return os.str();
}

inline featurize::MolViews deserialize_views(const std::string &text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, '|'))
    parts.push_back(part);
  if (parts.size() == 4)
    parts.emplace_back();
  if (parts.size() != 5)
    throw FormatError("cache entry has " + std::to_string(parts.size()) +
                      " fields, expected 5");
  featurize::MolViews v;
  v.num_atoms = std::stoi(parts[0]);
  std::istringstream atoms(parts[1]);
  std::string tok;
  while (atoms >> tok) {
    featurize::AtomFeature a {};
    if (std::sscanf(tok.c_str(), "%d,%d", &a.type, &a.chirality) != 2)
      throw FormatError("bad atom record '" + tok + "' in cache");
    v.atom_feats.push_back(a);
  }
  std::istringstream bonds(parts[2]);
  v.adjacency = Eigen::MatrixXi::Zero(v.num_atoms, v.num_atoms);
  while (bonds >> tok) {
    featurize::BondFeature b {};
    if (std::sscanf(tok.c_str(), "%d,%d,%d,%d", &b.a, &b.b, &b.type,
                    &b.direction) != 4 ||
        b.a < 0 || b.b < 0 || b.a >= v.num_atoms || b.b >= v.num_atoms)
      throw FormatError("bad bond record '" + tok + "' in cache");
    v.adjacency(b.a, b.b) = v.adjacency(b.b, b.a) = 1;
    v.bond_feats.push_back(b);
  }
  const auto colon = parts[3].find(':');
  if (colon == std::string::npos)
    throw FormatError("bad fingerprint record in cache");
  v.fingerprint.assign(std::stoul(parts[3].substr(0, colon)), 0);
  std::istringstream bits(parts[3].substr(colon + 1));
  std::size_t bit = 0;
  while (bits >> bit) {
    if (bit >= v.fingerprint.size())
      throw FormatError("fingerprint bit out of range in cache");
    v.fingerprint[bit] = 1;
  }
  std::istringstream toks(parts[4]);
  int t = 0;
  while (toks >> t)
    v.tokens.push_back(t);
  if (static_cast<int>(v.atom_feats.size()) != v.num_atoms)
    throw FormatError("cache entry atom count mismatch");
  return v;
}

/// Directory holding cache files: $MOCO_CACHE_DIR, else `fallback`.
inline std::string cache_root(const std::string &fallback) {
  if (const char *env = std::getenv("MOCO_CACHE_DIR"); env && *env)
    return env;
  return fallback;
}

struct CacheStats {
  int processed = 0;
  int parsed = 0;
  int skipped = 0;
  int hits = 0;
  int audited = 0;
};

/// Append-only cache file of position-free views, one tab-separated line
/// per entry: featurizer hash, SMILES, canonical key, serialized views.
/// Entries written under another featurizer hash are ignored; the last
/// entry for a SMILES wins.
class FeatureCache {
public:
  FeatureCache(std::string path, std::string hash)
      : path_(std::move(path)), hash_(std::move(hash)) {
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string part;
      while (std::getline(ss, part, '\t'))
        f.push_back(part);
      if (f.size() != 4 || f[0] != hash_)
        continue;
      entries_[f[1]] = { f[2], f[3] };
    }
  }

  const std::string &path() const { return path_; }
  std::size_t size() const { return entries_.size(); }

  /// Views for (canonical key, SMILES), if cached.
  std::optional<featurize::MolViews> find(const std::string &smiles,
                                          const std::string &key) const {
    auto it = entries_.find(smiles);
    if (it == entries_.end() || it->second.first != key)
      return std::nullopt;
    return deserialize_views(it->second.second);
  }

  void put(const std::string &smiles, const std::string &key,
           const featurize::MolViews &v) {
    std::string payload = serialize_views(v);
    pending_.push_back(hash_ + '\t' + smiles + '\t' + key + '\t' + payload);
    entries_[smiles] = { key, std::move(payload) };
  }

  void flush() {
    if (pending_.empty())
      return;
    const auto dir = std::filesystem::path(path_).parent_path();
    if (!dir.empty())
      std::filesystem::create_directories(dir);
    std::ofstream out(path_, std::ios::app);
    if (!out)
      throw Error("cannot write cache file " + path_);
    for (const std::string &l: pending_)
      out << l << '\n';
    pending_.clear();
  }

private:
  std::string path_, hash_;
  std::map<std::string, std::pair<std::string, std::string>> entries_;
  std::vector<std::string> pending_;
};

struct CachedFeaturization {
  pipeline::FeaturizedSet set;
  CacheStats stats;
};

/// Featurizes a dataset through the cache. Up to `audit` cache hits,
/// chosen with the seed, are recomputed and must match bit for bit.
inline CachedFeaturization
featurize_with_cache(const pipeline::Dataset &d, const featurize::BpeVocab &vocab,
                     const featurize::FeaturizerConfig &cfg, bool require_positions,
                     FeatureCache *cache, int audit, std::uint64_t seed) {
  CachedFeaturization out;
  std::vector<std::size_t> hit_slots;
  for (const pipeline::Record &r: d.records) {
    ++out.stats.processed;
    try {
      pipeline::Molecule m;
      m.row = r.row;
      m.smiles = r.smiles;
      m.labels = r.labels;
      m.graph = pipeline::parse_record(r);
      ++out.stats.parsed;
      const std::string key = chem::canonical_key(m.graph);
      std::optional<featurize::MolViews> base;
      if (cache)
        base = cache->find(r.smiles, key);
      if (base) {
        ++out.stats.hits;
        hit_slots.push_back(out.set.molecules.size());
      } else {
        base = featurize::build_views(m.graph, std::nullopt, vocab, cfg);
        if (cache)
          cache->put(r.smiles, key, *base);
      }
      m.frames = pipeline::attach_conformers(*base, m.graph, r.row,
                                             d.manifest.conformer_dir,
                                             require_positions);
      out.set.molecules.push_back(std::move(m));
    } catch (const DataError &e) {
      ++out.stats.skipped;
      out.set.skipped.push_back({ r.row, e.what() });
    }
  }
  Rng rng(seed, "cache.audit");
  rng.shuffle(hit_slots);
  if (hit_slots.size() > static_cast<std::size_t>(audit))
    hit_slots.resize(static_cast<std::size_t>(audit));
  for (std::size_t slot: hit_slots) {
    const pipeline::Molecule &m = out.set.molecules[slot];
    featurize::MolViews fresh = featurize::build_views(m.graph, std::nullopt, vocab, cfg);
    featurize::MolViews cached = m.frames.front();
    cached.positions.reset();
    if (!featurize::identical(fresh, cached))
      throw DataError("cache audit failed for row " + std::to_string(m.row) +
                      " in " + (cache ? cache->path() : std::string()) +
                      "; delete the cache file and rerun");
    ++out.stats.audited;
  }
  if (cache)
    cache->flush();
  return out;
}

}  // namespace moco::cli
