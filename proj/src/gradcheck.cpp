// SPDX-License-Identifier: Apache-2.0
#include "dmoa/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dmoa/embed.hpp"
#include "dmoa/router.hpp"
#include "dmoa/seed.hpp"

namespace dmoa {

namespace {

struct Problem {
  RouterConfig config;
  EmbeddingVector query;
  std::vector<std::vector<EmbeddingVector>> table;  // [step][agent]
  std::vector<std::vector<double>> entropies;       // [step][agent]
};

EmbeddingVector random_unit(Rng& rng, std::size_t d) {
  EmbeddingVector v;
  v.values.resize(d);
  double norm = 0.0;
  for (auto& x : v.values) {
    x = rng.uniform(-1.0, 1.0);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v.values) x /= norm;
  return v;
}

double trajectory_loss(const RouterTape& tape, const Problem& p, LossKind kind,
                       std::vector<std::vector<double>>* dz) {
  const double inv = 1.0 / static_cast<double>(tape.steps());
  double total = 0.0;
  for (std::size_t i = 0; i < tape.steps(); ++i) {
    const LossValue lv = step_loss(kind, tape.decision(i).logits_z, p.entropies[i]);
    total += lv.loss * inv;
    if (dz) {
      std::vector<double> g = lv.grad;
      for (auto& x : g) x *= inv;
      dz->push_back(std::move(g));
    }
  }
  return total;
}

std::vector<std::vector<int>> selections(const RouterTape& tape) {
  std::vector<std::vector<int>> out;
  for (std::size_t i = 0; i < tape.steps(); ++i) out.push_back(tape.decision(i).selected_ids);
  return out;
}

}  // namespace

GradcheckResult gradient_check(const GradcheckOptions& o) {
  Problem p;
  p.config.pool_size = o.pool_size;
  p.config.max_route = o.max_route;
  p.config.temperature = o.temperature;
  p.config.embed_dim = o.dim;
  p.config.max_steps = o.steps;
  p.config.train_steps = o.steps;
  p.config.seed = o.seed;
  p.config = validate_config(p.config);

  Rng rng(derive_seed(o.seed, "gradcheck"));
  p.query = random_unit(rng, o.dim);
  p.table.resize(o.steps);
  p.entropies.resize(o.steps);
  for (std::size_t s = 0; s < o.steps; ++s) {
    for (std::size_t a = 0; a < o.pool_size; ++a) {
      p.table[s].push_back(random_unit(rng, o.dim));
      p.entropies[s].push_back(rng.uniform(0.0, std::log(16.0)));
    }
  }

  RouterParams params = RouterParams::initialize(o.dim, o.pool_size, o.seed);
  const RouterTape base = forward_trajectory(p.query, p.table, params, p.config);
  std::vector<std::vector<double>> dz;
  trajectory_loss(base, p, o.loss, &dz);
  RouterParams grads = backward_trajectory(base, dz);
  if (o.corrupt) grads.w_o.data.front() += 1e-2;
  const auto base_sel = selections(base);

  std::vector<std::span<const double>> analytic;
  grads.for_each_tensor([&](std::string_view, std::span<const double> g) { analytic.push_back(g); });

  GradcheckResult result;
  std::size_t t = 0;
  params.for_each_tensor([&](std::string_view name, std::span<double> w) {
    const auto g = analytic[t++];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double keep = w[i];
      w[i] = keep + o.fd_step;
      const RouterTape plus = forward_trajectory(p.query, p.table, params, p.config);
      const double lp = trajectory_loss(plus, p, o.loss, nullptr);
      w[i] = keep - o.fd_step;
      const RouterTape minus = forward_trajectory(p.query, p.table, params, p.config);
      const double lm = trajectory_loss(minus, p, o.loss, nullptr);
      w[i] = keep;
      if (selections(plus) != base_sel || selections(minus) != base_sel) ++result.selection_flips;
      const double fd = (lp - lm) / (2.0 * o.fd_step);
      const double abs_err = std::abs(g[i] - fd);
      const double rel = abs_err / std::max({std::abs(g[i]), std::abs(fd), o.rel_floor});
      result.max_abs_error = std::max(result.max_abs_error, abs_err);
      if (rel > result.max_rel_error || result.checked == 0) {
        result.max_rel_error = std::max(result.max_rel_error, rel);
        if (rel >= result.max_rel_error) {
          result.worst_tensor = std::string(name);
          result.worst_index = i;
        }
      }
      ++result.checked;
    }
  });
  return result;
}

}  // namespace dmoa
