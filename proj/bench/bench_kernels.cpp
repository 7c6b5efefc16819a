// SPDX-License-Identifier: Apache-2.0
// Serial reference kernels against the OpenMP versions, plus a whole
// trajectory forward/backward at router scale.

#include <benchmark/benchmark.h>

#include <vector>

#include "dmoa/kernels.hpp"
#include "dmoa/learning.hpp"
#include "dmoa/router.hpp"
#include "dmoa/seed.hpp"

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  dmoa::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

template <bool Parallel>
void BM_Matvec(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vector(n * n, 1), x = random_vector(n, 2);
  std::vector<double> y(n);
  for (auto _ : state) {
    if constexpr (Parallel) dmoa::kernels::matvec(a, n, n, x, y);
    else dmoa::kernels::reference::matvec(a, n, n, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <bool Parallel>
void BM_MatvecT(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vector(n * n, 3), v = random_vector(n, 4);
  std::vector<double> y(n);
  for (auto _ : state) {
    if constexpr (Parallel) dmoa::kernels::matvec_t_acc(a, n, n, v, y);
    else dmoa::kernels::reference::matvec_t_acc(a, n, n, v, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <bool Parallel>
void BM_Outer(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto v = random_vector(n, 5), w = random_vector(n, 6);
  std::vector<double> g(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) dmoa::kernels::outer_acc(g, n, n, v, w);
    else dmoa::kernels::reference::outer_acc(g, n, n, v, w);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

void BM_TrajectoryForwardBackward(benchmark::State& state) {
  const std::size_t d = 384, n = 8, steps = static_cast<std::size_t>(state.range(0));
  dmoa::RouterConfig cfg;
  cfg.pool_size = n;
  cfg.max_route = 4;
  cfg.embed_dim = d;
  const auto params = dmoa::RouterParams::initialize(d, n, 11);
  std::vector<std::vector<dmoa::EmbeddingVector>> table(steps);
  for (std::size_t s = 0; s < steps; ++s)
    for (std::size_t a = 0; a < n; ++a) table[s].emplace_back(random_vector(d, 100 + s * n + a));
  const dmoa::EmbeddingVector query(random_vector(d, 7));
  const auto entropies = random_vector(n, 8);
  for (auto _ : state) {
    const auto tape = dmoa::forward_trajectory(query, table, params, cfg);
    std::vector<std::vector<double>> dz;
    for (std::size_t s = 0; s < steps; ++s)
      dz.push_back(dmoa::step_loss(dmoa::LossKind::Ranking, tape.decision(s).logits_z, entropies).grad);
    auto grads = dmoa::backward_trajectory(tape, dz);
    benchmark::DoNotOptimize(grads.w_o.data.data());
  }
}

}  // namespace

BENCHMARK_TEMPLATE(BM_Matvec, false)->Name("matvec/serial")->Arg(64)->Arg(384)->Arg(1024);
BENCHMARK_TEMPLATE(BM_Matvec, true)->Name("matvec/openmp")->Arg(64)->Arg(384)->Arg(1024);
BENCHMARK_TEMPLATE(BM_MatvecT, false)->Name("matvec_t_acc/serial")->Arg(64)->Arg(384)->Arg(1024);
BENCHMARK_TEMPLATE(BM_MatvecT, true)->Name("matvec_t_acc/openmp")->Arg(64)->Arg(384)->Arg(1024);
BENCHMARK_TEMPLATE(BM_Outer, false)->Name("outer_acc/serial")->Arg(64)->Arg(384)->Arg(1024);
BENCHMARK_TEMPLATE(BM_Outer, true)->Name("outer_acc/openmp")->Arg(64)->Arg(384)->Arg(1024);
BENCHMARK(BM_TrajectoryForwardBackward)->Arg(3)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
