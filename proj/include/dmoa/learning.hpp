// SPDX-License-Identifier: Apache-2.0
#pragma once

// Entropy-derived supervision, routing losses and the AdamW optimizer.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dmoa/router.hpp"

namespace dmoa {

/// Shannon entropy in nats, with 0 ln 0 = 0.
double token_entropy(std::span<const double> distribution);

/// Mean per-token entropy over M >= 1 token distributions. Each must be
/// non-negative and sum to 1 within 1e-6.
double predictive_entropy(const std::vector<std::vector<double>>& token_distributions);

/// softmax(-E).
std::vector<double> confidence(std::span<const double> entropies);

enum class LossKind { Ranking, Mse, ListMle, Triplet };

LossKind loss_kind_from_string(std::string_view name);
const char* to_string(LossKind kind) noexcept;

/// A loss value and its gradient with respect to the routing
/// probabilities Z.
struct LossValue {
  double loss = 0.0;
  std::vector<double> grad;
};

/// sum over ordered pairs with C_a > C_b (strict) of
/// log(1 + exp(-(Z_a - Z_b))).
LossValue ranking_loss(std::span<const double> z_probs, std::span<const double> conf);

/// mean over agents of (Z_a - C_a)^2.
LossValue mse_loss(std::span<const double> z_probs, std::span<const double> conf);

/// Plackett-Luce negative log-likelihood of the permutation that sorts C
/// descending (ties by ascending index), with Z as the scores.
LossValue listmle_loss(std::span<const double> z_probs, std::span<const double> conf);

/// sum over pairs with C_a > C_b of max(0, margin - (Z_a - Z_b)).
LossValue triplet_loss(std::span<const double> z_probs, std::span<const double> conf, double margin = 0.1);

LossValue routing_loss(LossKind kind, std::span<const double> z_probs, std::span<const double> conf);

/// One step's loss on raw logits: Z = softmax(z), C = softmax(-E). The
/// gradient is with respect to z (the softmax Jacobian is applied).
LossValue step_loss(LossKind kind, std::span<const double> logits, std::span<const double> entropies);

/// Arithmetic mean of per-step losses.
double total_loss(std::span<const double> per_step_losses);

double global_norm(const RouterParams& grads);

/// Rescales every tensor by clip_norm / g when the global L2 norm g exceeds
/// clip_norm. Returns g (before clipping).
double clip_gradients(RouterParams& grads, double clip_norm);

struct AdamWHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  double clip_norm = 1.0;
};

struct OptimizerState {
  RouterParams first_moment;
  RouterParams second_moment;
  std::uint64_t step_count = 0;
  AdamWHyper hyper;

  static OptimizerState for_params(const RouterParams& params, const AdamWHyper& hyper);
};

/// Decoupled weight decay Adam with bias correction:
///   p -= lr * wd * p;  m = b1 m + (1-b1) g;  v = b2 v + (1-b2) g^2;
///   p -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
void adamw_step(RouterParams& params, const RouterParams& grads, OptimizerState& state);

}  // namespace dmoa
