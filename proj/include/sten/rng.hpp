// SPDX-License-Identifier: Apache-2.0
//
// Seed derivation. Every random stream in the library is seeded from one
// master seed expanded by name, so streams are independent of each other and
// of the order in which they are consumed.
#pragma once

#include <cstdint>
#include <string_view>

namespace sten {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30U)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27U)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31U);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (char ch : stream) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ULL;
  }
  return splitmix64(master ^ splitmix64(h));
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) noexcept {
  return splitmix64(splitmix64(base ^ splitmix64(a)) ^ splitmix64(b + 0x632BE59BD9B4E019ULL));
}

}  // namespace sten
