// SPDX-License-Identifier: Apache-2.0
#include "dmoa/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dmoa/error.hpp"
#include "dmoa/numeric.hpp"

namespace dmoa {

double token_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

double predictive_entropy(const std::vector<std::vector<double>>& dists) {
  if (dists.empty()) throw Error("predictive entropy needs at least one token distribution");
  double sum = 0.0;
  for (std::size_t t = 0; t < dists.size(); ++t) {
    const auto& p = dists[t];
    double mass = 0.0;
    for (double x : p) {
      if (!(x >= 0.0) || !std::isfinite(x))
        throw NumericError("token " + std::to_string(t) + " has a negative or non-finite probability");
      mass += x;
    }
    if (std::abs(mass - 1.0) > 1e-6)
      throw NumericError("token " + std::to_string(t) + " distribution sums to " + std::to_string(mass));
    sum += token_entropy(p);
  }
  return sum / static_cast<double>(dists.size());
}

std::vector<double> confidence(std::span<const double> entropies) {
  std::vector<double> neg(entropies.size());
  for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -entropies[i];
  return softmax(neg);
}

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "ranking") return LossKind::Ranking;
  if (name == "mse") return LossKind::Mse;
  if (name == "listmle") return LossKind::ListMle;
  if (name == "triplet") return LossKind::Triplet;
  throw ConfigError("unknown loss kind '" + std::string(name) + "'");
}

const char* to_string(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::Ranking: return "ranking";
    case LossKind::Mse: return "mse";
    case LossKind::ListMle: return "listmle";
    case LossKind::Triplet: return "triplet";
  }
  return "?";
}

namespace {

void check_lengths(std::span<const double> z, std::span<const double> c) {
  if (z.size() != c.size())
    throw ShapeError("loss inputs differ in length (" + std::to_string(z.size()) + " vs " + std::to_string(c.size()) + ")");
}

}  // namespace

LossValue ranking_loss(std::span<const double> z, std::span<const double> c) {
  check_lengths(z, c);
  LossValue out;
  out.grad.assign(z.size(), 0.0);
  for (std::size_t a = 0; a < z.size(); ++a) {
    for (std::size_t b = 0; b < z.size(); ++b) {
      if (!(c[a] > c[b])) continue;
      const double margin = z[a] - z[b];
      out.loss += softplus(-margin);
      const double s = sigmoid(-margin);  // d softplus(-m) / dm = -sigmoid(-m)
      out.grad[a] -= s;
      out.grad[b] += s;
    }
  }
  return out;
}

LossValue mse_loss(std::span<const double> z, std::span<const double> c) {
  check_lengths(z, c);
  LossValue out;
  out.grad.assign(z.size(), 0.0);
  const double n = static_cast<double>(z.size());
  for (std::size_t a = 0; a < z.size(); ++a) {
    const double diff = z[a] - c[a];
    out.loss += diff * diff / n;
    out.grad[a] = 2.0 * diff / n;
  }
  return out;
}

LossValue listmle_loss(std::span<const double> z, std::span<const double> c) {
  check_lengths(z, c);
  const std::size_t n = z.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c[a] > c[b]; });

  LossValue out;
  out.grad.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    // -s_{pi_i} + logsumexp(s_{pi_i}, ..., s_{pi_n})
    double m = -INFINITY;
    for (std::size_t j = i; j < n; ++j) m = std::max(m, z[order[j]]);
    double sum = 0.0;
    for (std::size_t j = i; j < n; ++j) sum += std::exp(z[order[j]] - m);
    out.loss += -z[order[i]] + m + std::log(sum);
    out.grad[order[i]] -= 1.0;
    for (std::size_t j = i; j < n; ++j) out.grad[order[j]] += std::exp(z[order[j]] - m) / sum;
  }
  return out;
}

LossValue triplet_loss(std::span<const double> z, std::span<const double> c, double margin) {
  check_lengths(z, c);
  LossValue out;
  out.grad.assign(z.size(), 0.0);
  for (std::size_t a = 0; a < z.size(); ++a) {
    for (std::size_t b = 0; b < z.size(); ++b) {
      if (!(c[a] > c[b])) continue;
      const double hinge = margin - (z[a] - z[b]);
      if (hinge <= 0.0) continue;
      out.loss += hinge;
      out.grad[a] -= 1.0;
      out.grad[b] += 1.0;
    }
  }
  return out;
}

LossValue routing_loss(LossKind kind, std::span<const double> z, std::span<const double> c) {
  switch (kind) {
    case LossKind::Ranking: return ranking_loss(z, c);
    case LossKind::Mse: return mse_loss(z, c);
    case LossKind::ListMle: return listmle_loss(z, c);
    case LossKind::Triplet: return triplet_loss(z, c);
  }
  throw Error("unhandled loss kind");
}

LossValue step_loss(LossKind kind, std::span<const double> logits, std::span<const double> entropies) {
  if (logits.size() != entropies.size()) throw ShapeError("logits and entropy vector differ in length");
  const auto probs = softmax(logits);
  const auto conf = confidence(entropies);
  auto value = routing_loss(kind, probs, conf);
  value.grad = softmax_backward(probs, value.grad);
  return value;
}

double total_loss(std::span<const double> per_step) {
  if (per_step.empty()) throw Error("total loss needs at least one step");
  double sum = 0.0;
  for (double x : per_step) sum += x;
  return sum / static_cast<double>(per_step.size());
}

double global_norm(const RouterParams& grads) {
  double sq = 0.0;
  grads.for_each_tensor([&](std::string_view, std::span<const double> v) {
    for (double x : v) sq += x * x;
  });
  return std::sqrt(sq);
}

double clip_gradients(RouterParams& grads, double clip_norm) {
  if (!(clip_norm > 0.0)) throw ConfigError("clip norm must be positive");
  const double g = global_norm(grads);
  if (g > clip_norm) {
    const double scale = clip_norm / g;
    grads.for_each_tensor([&](std::string_view, std::span<double> v) {
      for (double& x : v) x *= scale;
    });
  }
  return g;
}

OptimizerState OptimizerState::for_params(const RouterParams& params, const AdamWHyper& hyper) {
  OptimizerState s;
  s.first_moment = RouterParams::zeros(params.dim, params.pool_size);
  s.second_moment = RouterParams::zeros(params.dim, params.pool_size);
  s.hyper = hyper;
  return s;
}

void adamw_step(RouterParams& params, const RouterParams& grads, OptimizerState& state) {
  check_shapes(grads, params.dim, params.pool_size);
  check_shapes(state.first_moment, params.dim, params.pool_size);
  check_shapes(state.second_moment, params.dim, params.pool_size);

  std::vector<std::span<double>> p, m, v;
  std::vector<std::span<const double>> g;
  std::vector<std::string_view> names;
  params.for_each_tensor([&](std::string_view name, std::span<double> t) {
    names.push_back(name);
    p.push_back(t);
  });
  grads.for_each_tensor([&](std::string_view, std::span<const double> t) { g.push_back(t); });
  state.first_moment.for_each_tensor([&](std::string_view, std::span<double> t) { m.push_back(t); });
  state.second_moment.for_each_tensor([&](std::string_view, std::span<double> t) { v.push_back(t); });

  const auto& h = state.hyper;
  const std::uint64_t t = state.step_count + 1;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));

  // Compute into scratch copies so a non-finite update leaves params intact.
  RouterParams next = params;
  OptimizerState next_state = state;
  std::vector<std::span<double>> np, nm, nv;
  next.for_each_tensor([&](std::string_view, std::span<double> s) { np.push_back(s); });
  next_state.first_moment.for_each_tensor([&](std::string_view, std::span<double> s) { nm.push_back(s); });
  next_state.second_moment.for_each_tensor([&](std::string_view, std::span<double> s) { nv.push_back(s); });

  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      double w = p[k][i];
      w -= h.lr * h.weight_decay * w;
      const double mi = h.beta1 * m[k][i] + (1.0 - h.beta1) * g[k][i];
      const double vi = h.beta2 * v[k][i] + (1.0 - h.beta2) * g[k][i] * g[k][i];
      w -= h.lr * (mi / bc1) / (std::sqrt(vi / bc2) + h.epsilon);
      np[k][i] = w;
      nm[k][i] = mi;
      nv[k][i] = vi;
    }
    if (!all_finite(np[k])) throw NumericError("AdamW produced a non-finite value in tensor " + std::string(names[k]));
  }
  next_state.step_count = t;
  params = std::move(next);
  state = std::move(next_state);
}

}  // namespace dmoa
