//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace moco {

constexpr std::uint32_t kFnv32Offset = 2166136261U;
constexpr std::uint32_t kFnv32Prime = 16777619U;

constexpr std::uint64_t kFnv64Offset = 14695981039346656037ULL;
constexpr std::uint64_t kFnv64Prime = 1099511628211ULL;

/// Incremental 32-bit FNV-1a. Integers are fed as 4 little-endian bytes.
class Fnv1a32 {
public:
  constexpr Fnv1a32 &byte(std::uint8_t b) {
    h_ = (h_ ^ b) * kFnv32Prime;
    return *this;
  }

  constexpr Fnv1a32 &i32(std::int32_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int k = 0; k < 4; ++k)
      byte(static_cast<std::uint8_t>((u >> (8 * k)) & 0xFFU));
    return *this;
  }

  constexpr std::uint32_t value() const { return h_; }

private:
  std::uint32_t h_ = kFnv32Offset;
};

class Fnv1a64 {
public:
  Fnv1a64 &bytes(std::string_view s) {
    for (unsigned char c: s)
      h_ = (h_ ^ c) * kFnv64Prime;
    return *this;
  }

  std::uint64_t value() const { return h_; }

private:
  std::uint64_t h_ = kFnv64Offset;
};

inline std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace moco
