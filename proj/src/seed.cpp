// SPDX-License-Identifier: Apache-2.0
#include "dmoa/seed.hpp"

namespace dmoa {

std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) noexcept {
  return splitmix64(parent ^ fnv1a64(label));
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t key) noexcept {
  return splitmix64(parent ^ splitmix64(key));
}

}  // namespace dmoa
