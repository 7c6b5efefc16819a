// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense linear-algebra kernels used by the router. Matrices are row-major.
//
// Two implementations share one signature set:
//   kernels::reference  plain serial loops, kept as the test oracle;
//   kernels             OpenMP-parallel versions used by the router.
// Each output element is accumulated in the same order in both, so the
// parallel kernels reproduce the reference bit for bit.

#include <cstddef>
#include <span>

namespace dmoa::kernels {

/// y = A x, with A of shape rows x cols.
void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y);

/// y += A^T v, with A of shape rows x cols, v of length rows, y of length cols.
void matvec_t_acc(std::span<const double> a, std::size_t rows, std::size_t cols,
                  std::span<const double> v, std::span<double> y);

/// G += v w^T, with G of shape rows x cols.
void outer_acc(std::span<double> g, std::size_t rows, std::size_t cols,
               std::span<const double> v, std::span<const double> w);

/// Work size (rows * cols) below which the parallel kernels stay serial.
inline constexpr std::size_t kParallelThreshold = 16 * 1024;

namespace reference {

void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y);
void matvec_t_acc(std::span<const double> a, std::size_t rows, std::size_t cols,
                  std::span<const double> v, std::span<double> y);
void outer_acc(std::span<double> g, std::size_t rows, std::size_t cols,
               std::span<const double> v, std::span<const double> w);

}  // namespace reference

}  // namespace dmoa::kernels
