//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "moco/error.hpp"

namespace moco::featurize {

/// Byte-pair vocabulary. Ids: the four specials, then the single
/// characters of the training alphabet in byte order, then one id per
/// distinct merged token in merge order.
class BpeVocab {
public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kMask = 3;
  static constexpr int kNumSpecial = 4;

  BpeVocab() = default;

  BpeVocab(std::vector<char> alphabet,
           std::vector<std::pair<std::string, std::string>> merges)
      : alphabet_(std::move(alphabet)), merges_(std::move(merges)) {
    std::sort(alphabet_.begin(), alphabet_.end(), [](char x, char y) {
      return static_cast<unsigned char>(x) < static_cast<unsigned char>(y);
    });
    alphabet_.erase(std::unique(alphabet_.begin(), alphabet_.end()),
                    alphabet_.end());
    rebuild();
  }

  const std::vector<char> &alphabet() const { return alphabet_; }

  const std::vector<std::pair<std::string, std::string>> &merges() const {
    return merges_;
  }

  int size() const { return static_cast<int>(id_to_token_.size()); }

  /// Id of a token string, or kUnk.
  int id(const std::string &token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
  }

  bool contains(const std::string &token) const {
    return token_to_id_.count(token) != 0;
  }

  const std::string &token(int id) const { return id_to_token_.at(id); }

  /// Merge priority of a symbol pair; lower merges first.
  int rank(const std::string &left, const std::string &right) const {
    auto it = ranks_.find(pair_key(left, right));
    return it == ranks_.end() ? std::numeric_limits<int>::max() : it->second;
  }

  bool operator==(const BpeVocab &o) const {
    return alphabet_ == o.alphabet_ && merges_ == o.merges_;
  }

private:
  static std::string pair_key(const std::string &l, const std::string &r) {
    return std::to_string(l.size()) + ':' + l + r;
  }

  void rebuild() {
    id_to_token_ = { "[PAD]", "[UNK]", "[CLS]", "[MASK]" };
    token_to_id_.clear();
    ranks_.clear();
    for (char c: alphabet_)
      add(std::string(1, c));
    for (std::size_t k = 0; k < merges_.size(); ++k) {
      const auto &[l, r] = merges_[k];
      ranks_.emplace(pair_key(l, r), static_cast<int>(k));
      add(l + r);
    }
  }

  void add(const std::string &tok) {
    if (token_to_id_.count(tok))
      return;
    token_to_id_.emplace(tok, static_cast<int>(id_to_token_.size()));
    id_to_token_.push_back(tok);
  }

  std::vector<char> alphabet_;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  std::unordered_map<std::string, int> ranks_;
};

namespace detail {

inline void merge_all(std::vector<std::string> &sym, const std::string &l,
                      const std::string &r) {
  std::vector<std::string> out;
  out.reserve(sym.size());
  for (std::size_t i = 0; i < sym.size(); ++i) {
    if (i + 1 < sym.size() && sym[i] == l && sym[i + 1] == r) {
      out.push_back(l + r);
      ++i;
    } else {
      out.push_back(std::move(sym[i]));
    }
  }
  sym = std::move(out);
}

}  // namespace detail

/// Learns merges until the alphabet plus merged tokens reach vocab_size
/// (specials not counted) or no adjacent pair remains. The most frequent
/// pair wins; equal counts go to the lexicographically smallest pair.
inline BpeVocab bpe_train(const std::vector<std::string> &corpus,
                          int vocab_size) {
  if (corpus.empty())
    throw std::invalid_argument("bpe_train: empty corpus");
  std::set<char> chars;
  for (const std::string &s: corpus)
    chars.insert(s.begin(), s.end());
  std::vector<char> alphabet(chars.begin(), chars.end());

  // Identical strings are trained once with a multiplicity. Symbols are
  // interned so pair counting works on integers.
  std::map<std::string, long> counts;
  for (const std::string &s: corpus)
    ++counts[s];
  std::vector<std::string> names;
  std::unordered_map<std::string, int> intern;
  auto symbol = [&](const std::string &t) {
    auto [it, fresh] = intern.emplace(t, static_cast<int>(names.size()));
    if (fresh)
      names.push_back(t);
    return it->second;
  };
  std::vector<std::vector<int>> words;
  std::vector<long> mult;
  for (const auto &[s, c]: counts) {
    std::vector<int> w;
    for (char ch: s)
      w.push_back(symbol(std::string(1, ch)));
    words.push_back(std::move(w));
    mult.push_back(c);
  }

  std::vector<std::pair<std::string, std::string>> merges;
  std::set<std::string> tokens;
  for (char c: alphabet)
    tokens.emplace(1, c);
  std::unordered_map<std::uint64_t, long> freq;
  while (static_cast<int>(tokens.size()) < vocab_size) {
    freq.clear();
    for (std::size_t w = 0; w < words.size(); ++w) {
      const auto &sym = words[w];
      for (std::size_t i = 0; i + 1 < sym.size(); ++i)
        freq[(static_cast<std::uint64_t>(sym[i]) << 32) | sym[i + 1]] +=
            mult[w];
    }
    if (freq.empty())
      break;
    long top = 0;
    for (const auto &[k, f]: freq)
      top = std::max(top, f);
    std::pair<std::string, std::string> best;
    bool have = false;
    for (const auto &[k, f]: freq) {
      if (f != top)
        continue;
      std::pair<std::string, std::string> cand { names[k >> 32],
                                                 names[k & 0xFFFFFFFFU] };
      if (!have || cand < best) {
        best = std::move(cand);
        have = true;
      }
    }
    const int l = intern.at(best.first), r = intern.at(best.second);
    const int m = symbol(best.first + best.second);
    tokens.insert(best.first + best.second);
    merges.push_back(std::move(best));
    for (auto &sym: words) {
      std::size_t o = 0;
      for (std::size_t i = 0; i < sym.size(); ++i) {
        if (i + 1 < sym.size() && sym[i] == l && sym[i + 1] == r) {
          sym[o++] = m;
          ++i;
        } else {
          sym[o++] = sym[i];
        }
      }
      sym.resize(o);
    }
  }
  return BpeVocab(std::move(alphabet), std::move(merges));
}

/// Token strings of s before id lookup. Characters outside the alphabet
/// become isolated symbols that never merge.
inline std::vector<std::string> bpe_segment(std::string_view s,
                                            const BpeVocab &vocab) {
  std::vector<std::string> sym;
  sym.reserve(s.size());
  for (char c: s)
    sym.emplace_back(1, c);
  while (sym.size() > 1) {
    int best = std::numeric_limits<int>::max();
    std::size_t at = 0;
    for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
      const int r = vocab.rank(sym[i], sym[i + 1]);
      if (r < best) {
        best = r;
        at = i;
      }
    }
    if (best == std::numeric_limits<int>::max())
      break;
    const std::string l = sym[at], r = sym[at + 1];
    detail::merge_all(sym, l, r);
  }
  return sym;
}

/// CLS-prefixed token ids.
inline std::vector<int> bpe_encode(std::string_view s, const BpeVocab &vocab) {
  std::vector<int> ids { BpeVocab::kCls };
  for (const std::string &t: bpe_segment(s, vocab))
    ids.push_back(vocab.id(t));
  return ids;
}

/// Concatenates token strings. PAD, CLS and MASK produce nothing; UNK
/// produces "?".
inline std::string bpe_decode(const std::vector<int> &ids,
                              const BpeVocab &vocab) {
  std::string out;
  for (int id: ids) {
    if (id == BpeVocab::kUnk)
      out += '?';
    else if (id >= BpeVocab::kNumSpecial)
      out += vocab.token(id);
  }
  return out;
}

namespace detail {

inline std::string escape_token(const std::string &t) {
  std::string out;
  for (unsigned char c: t) {
    if (c > 32 && c < 127 && c != '%') {
      out += static_cast<char>(c);
    } else {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

inline std::string unescape_token(const std::string &t) {
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == '%') {
      if (i + 2 >= t.size())
        throw FormatError("bad escape in vocabulary token '" + t + "'");
      out += static_cast<char>(std::stoi(t.substr(i + 1, 2), nullptr, 16));
      i += 2;
    } else {
      out += t[i];
    }
  }
  return out;
}

}  // namespace detail

// Vocabulary file: a "moco-bpe 1" header, one "alphabet" line of escaped
// characters, then one "merge <left> <right>" line per merge.

inline void write_vocab(std::ostream &os, const BpeVocab &v) {
  os << "moco-bpe 1\nalphabet";
  for (char c: v.alphabet())
    os << ' ' << detail::escape_token(std::string(1, c));
  os << '\n';
  for (const auto &[l, r]: v.merges())
    os << "merge " << detail::escape_token(l) << ' ' << detail::escape_token(r)
       << '\n';
}

inline BpeVocab read_vocab(std::istream &is) {
  std::string line;
  if (!std::getline(is, line) || line != "moco-bpe 1")
    throw FormatError("not a moco-bpe vocabulary");
  std::vector<char> alphabet;
  std::vector<std::pair<std::string, std::string>> merges;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag, a, b;
    ls >> tag;
    if (tag == "alphabet") {
      while (ls >> a) {
        const std::string c = detail::unescape_token(a);
        if (c.size() != 1)
          throw FormatError("alphabet entries must be single characters");
        alphabet.push_back(c[0]);
      }
    } else if (tag == "merge") {
      if (!(ls >> a >> b))
        throw FormatError("merge line needs two tokens");
      merges.emplace_back(detail::unescape_token(a), detail::unescape_token(b));
    } else if (!tag.empty()) {
      throw FormatError("unknown vocabulary line '" + tag + "'");
    }
  }
  return BpeVocab(std::move(alphabet), std::move(merges));
}

inline void save_vocab(const std::string &path, const BpeVocab &v) {
  std::ofstream os(path);
  if (!os)
    throw Error("cannot write vocabulary " + path);
  write_vocab(os, v);
}

inline BpeVocab load_vocab(const std::string &path) {
  std::ifstream is(path);
  if (!is)
    throw Error("cannot open vocabulary " + path);
  return read_vocab(is);
}

}  // namespace moco::featurize
