// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>

#include "dmoa/seed.hpp"
#include "helpers.hpp"

namespace {

TEST(Seed, Fnv1aMatchesReference) {
  EXPECT_EQ(dmoa::fnv1a64(""), oracle::hashing::kFnvEmpty);
  EXPECT_EQ(dmoa::fnv1a64("hello"), oracle::hashing::kFnvHello);
}

TEST(Seed, Splitmix64MatchesReference) {
  EXPECT_EQ(dmoa::splitmix64(0), oracle::hashing::kSplitmix0);
  EXPECT_EQ(dmoa::splitmix64(42), oracle::hashing::kSplitmix42);
  EXPECT_EQ(dmoa::derive_seed(42, "router-init"), oracle::hashing::kDerive42Init);
}

TEST(Seed, DerivedSeedsDifferByLabelAndKey) {
  std::set<std::uint64_t> seen;
  for (const char* label : {"a", "b", "agents", "router-init"}) seen.insert(dmoa::derive_seed(7, label));
  for (std::uint64_t k = 0; k < 16; ++k) seen.insert(dmoa::derive_seed(7, k));
  EXPECT_EQ(seen.size(), 20U);
}

TEST(Seed, UniformStaysInRangeAndIsReproducible) {
  dmoa::Rng a(99), b(99);
  for (int i = 0; i < 10000; ++i) {
    const double x = a.uniform(-1.0, 1.0);
    ASSERT_GE(x, -1.0);
    ASSERT_LT(x, 1.0);
    ASSERT_EQ(x, b.uniform(-1.0, 1.0));
  }
}

}  // namespace
