// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dmoa {

/// 64-bit FNV-1a over the bytes of `text`. This is the fixed string hash
/// used by the hash embedder and by seed derivation.
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Child seed for a named consumer: splitmix64(parent ^ fnv1a64(label)).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) noexcept;

/// Child seed keyed by an integer (e.g. agent id, step index).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t key) noexcept;

/// Platform-stable generator: mt19937_64 plus explicit bit-to-double
/// conversion (std::uniform_real_distribution is implementation defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dmoa
