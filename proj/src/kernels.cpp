// SPDX-License-Identifier: Apache-2.0
#include "dmoa/kernels.hpp"

#include <algorithm>
#include <cstdint>

namespace dmoa::kernels {

namespace reference {

void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += a[r * cols + c] * x[c];
    y[r] = acc;
  }
}

void matvec_t_acc(std::span<const double> a, std::size_t rows, std::size_t cols,
                  std::span<const double> v, std::span<double> y) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) y[c] += a[r * cols + c] * v[r];
}

void outer_acc(std::span<double> g, std::size_t rows, std::size_t cols,
               std::span<const double> v, std::span<const double> w) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += v[r] * w[c];
}

}  // namespace reference

void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<std::int64_t>(rows);
  const double* ap = a.data();
  const double* xp = x.data();
  double* yp = y.data();
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelThreshold)
  for (std::int64_t r = 0; r < n; ++r) {
    const double* row = ap + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * xp[c];
    yp[r] = acc;
  }
}

void matvec_t_acc(std::span<const double> a, std::size_t rows, std::size_t cols,
                  std::span<const double> v, std::span<double> y) {
  // Parallel over blocks of output columns. Within a block, rows are swept
  // in ascending order with contiguous loads, so every column accumulates in
  // the same order as the reference loop nest.
  constexpr std::size_t kBlock = 256;
  const auto blocks = static_cast<std::int64_t>((cols + kBlock - 1) / kBlock);
  const double* ap = a.data();
  const double* vp = v.data();
  double* yp = y.data();
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelThreshold)
  for (std::int64_t b = 0; b < blocks; ++b) {
    const std::size_t c0 = static_cast<std::size_t>(b) * kBlock;
    const std::size_t c1 = std::min(cols, c0 + kBlock);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = ap + r * cols;
      const double vr = vp[r];
      for (std::size_t c = c0; c < c1; ++c) yp[c] += row[c] * vr;
    }
  }
}

void outer_acc(std::span<double> g, std::size_t rows, std::size_t cols,
               std::span<const double> v, std::span<const double> w) {
  const auto n = static_cast<std::int64_t>(rows);
  double* gp = g.data();
  const double* vp = v.data();
  const double* wp = w.data();
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelThreshold)
  for (std::int64_t r = 0; r < n; ++r) {
    double* row = gp + r * cols;
    const double vr = vp[r];
    for (std::size_t c = 0; c < cols; ++c) row[c] += vr * wp[c];
  }
}

}  // namespace dmoa::kernels
