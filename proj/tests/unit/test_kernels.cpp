// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <omp.h>

#include <vector>

#include "dmoa/kernels.hpp"
#include "dmoa/seed.hpp"

namespace {

namespace k = dmoa::kernels;

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  dmoa::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

class KernelParity : public ::testing::TestWithParam<std::pair<std::size_t, std::size_t>> {
 protected:
  void SetUp() override {
    saved_ = omp_get_max_threads();
    omp_set_num_threads(4);  // exercise the parallel path even on one core
  }
  void TearDown() override { omp_set_num_threads(saved_); }
  int saved_ = 1;
};

TEST_P(KernelParity, MatvecIsBitwiseEqual) {
  const auto [rows, cols] = GetParam();
  const auto a = noise(rows * cols, 1), x = noise(cols, 2);
  std::vector<double> y1(rows), y2(rows);
  k::reference::matvec(a, rows, cols, x, y1);
  k::matvec(a, rows, cols, x, y2);
  EXPECT_EQ(y1, y2);
}

TEST_P(KernelParity, TransposedAccumulateIsBitwiseEqual) {
  const auto [rows, cols] = GetParam();
  const auto a = noise(rows * cols, 3), v = noise(rows, 4);
  auto y1 = noise(cols, 5), y2 = y1;
  k::reference::matvec_t_acc(a, rows, cols, v, y1);
  k::matvec_t_acc(a, rows, cols, v, y2);
  EXPECT_EQ(y1, y2);
}

TEST_P(KernelParity, OuterAccumulateIsBitwiseEqual) {
  const auto [rows, cols] = GetParam();
  const auto v = noise(rows, 6), w = noise(cols, 7);
  auto g1 = noise(rows * cols, 8), g2 = g1;
  k::reference::outer_acc(g1, rows, cols, v, w);
  k::outer_acc(g2, rows, cols, v, w);
  EXPECT_EQ(g1, g2);
}

INSTANTIATE_TEST_SUITE_P(Shapes, KernelParity,
                         ::testing::Values(std::pair<std::size_t, std::size_t>{1, 1},
                                           std::pair<std::size_t, std::size_t>{3, 7},
                                           std::pair<std::size_t, std::size_t>{8, 384},
                                           std::pair<std::size_t, std::size_t>{384, 384},
                                           std::pair<std::size_t, std::size_t>{300, 700}),
                         [](const auto& info) {
                           return std::to_string(info.param.first) + "x" + std::to_string(info.param.second);
                         });

TEST(Kernels, MatvecSmallCase) {
  const std::vector<double> a = {1, 2, 3, 4, 5, 6};
  const std::vector<double> x = {1, 0, -1};
  std::vector<double> y(2);
  k::matvec(a, 2, 3, x, y);
  EXPECT_EQ(y, (std::vector<double>{-2, -2}));
  std::vector<double> t = {1, 1, 1};
  k::matvec_t_acc(a, 2, 3, std::vector<double>{1, 2}, t);
  EXPECT_EQ(t, (std::vector<double>{10, 13, 16}));
}

}  // namespace
