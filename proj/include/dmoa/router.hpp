// SPDX-License-Identifier: Apache-2.0
#pragma once

// Recurrent router: a GRU cell over context embeddings, a linear head to
// per-agent logits, adaptive-k top-k selection, softmax-weighted context
// aggregation, and backpropagation through time over a whole trajectory.
//
// GRU convention (reset gate applied to the recurrent candidate term):
//   r  = sigmoid(W_r x + U_r h + b_r)
//   u  = sigmoid(W_u x + U_u h + b_u)
//   n  = tanh(W_n x + b_in + r * (U_n h + b_hn))
//   h' = (1 - u) * n + u * h
// The cell output is h' itself.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dmoa/core.hpp"

namespace dmoa {

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool operator==(const Matrix&) const = default;
};

struct RouterParams {
  std::size_t dim = 0;        // d
  std::size_t pool_size = 0;  // N
  Matrix w_r, w_u, w_n;       // input weights, d x d
  Matrix u_r, u_u, u_n;       // recurrent weights, d x d
  std::vector<double> b_r, b_u, b_in, b_hn;
  Matrix w_o;                 // head, N x d
  std::vector<double> b_o;

  /// All-zero tensors with the given shapes.
  static RouterParams zeros(std::size_t dim, std::size_t pool_size);

  /// Every entry uniform in (-1/sqrt(d), +1/sqrt(d)), biases included,
  /// drawn from a generator seeded with derive_seed(seed, "router-init").
  static RouterParams initialize(std::size_t dim, std::size_t pool_size, std::uint64_t seed);

  /// Visits every tensor in a fixed order as (name, flat values).
  template <typename F>
  void for_each_tensor(F&& f) {
    f("W_r", std::span<double>(w_r.data));
    f("W_u", std::span<double>(w_u.data));
    f("W_n", std::span<double>(w_n.data));
    f("U_r", std::span<double>(u_r.data));
    f("U_u", std::span<double>(u_u.data));
    f("U_n", std::span<double>(u_n.data));
    f("b_r", std::span<double>(b_r));
    f("b_u", std::span<double>(b_u));
    f("b_in", std::span<double>(b_in));
    f("b_hn", std::span<double>(b_hn));
    f("W_o", std::span<double>(w_o.data));
    f("b_o", std::span<double>(b_o));
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    const_cast<RouterParams*>(this)->for_each_tensor(
        [&](std::string_view name, std::span<double> v) { f(name, std::span<const double>(v)); });
  }

  std::size_t parameter_count() const;

  bool operator==(const RouterParams&) const = default;
};

/// Throws ShapeError unless `params` matches (d, N).
void check_shapes(const RouterParams& params, std::size_t dim, std::size_t pool_size);

struct RouterState {
  std::vector<double> hidden;
  static RouterState zeros(std::size_t d) { return RouterState{std::vector<double>(d, 0.0)}; }
};

/// Activations of one GRU step retained for the backward pass.
struct GruCache {
  std::vector<double> x, h_prev;
  std::vector<double> reset, update, candidate;
  std::vector<double> recurrent_candidate;  // U_n h + b_hn
  std::vector<double> h_next;
};

struct GruOutput {
  RouterState next;
  std::vector<double> output;  // equal to next.hidden
};

GruOutput gru_step(const EmbeddingVector& x, const RouterState& h, const RouterParams& params);

/// Same as gru_step but also fills `cache`.
GruOutput gru_step(const EmbeddingVector& x, const RouterState& h, const RouterParams& params,
                   GruCache& cache);

/// z = W_o o + b_o.
std::vector<double> head(std::span<const double> output, const RouterParams& params);

/// min(K, #{i : softmax(z / tau)_i >= 1/N}).
int adaptive_k(std::span<const double> logits, double tau, std::size_t max_route, std::size_t pool_size);

/// Indices of the k largest logits ordered by descending logit, ties by
/// ascending index.
std::vector<int> keep_top_k(std::span<const double> logits, int k);

struct Aggregation {
  std::vector<double> alpha;
  EmbeddingVector context;
};

/// alpha = softmax(kept_logits) (no temperature); context = sum_j alpha_j e_j.
Aggregation aggregate_context(std::span<const double> kept_logits,
                              std::span<const EmbeddingVector> embeddings);

/// As above, but entries with survived[j] == false get alpha 0 and the
/// softmax is taken over the survivors only. At least one must survive.
Aggregation aggregate_context(std::span<const double> kept_logits,
                              std::span<const EmbeddingVector> embeddings,
                              const std::vector<bool>& survived);

struct RoutingDecision {
  std::vector<double> logits_z;
  std::vector<double> count_probs;
  int k = 1;
  std::vector<int> selected_ids;
  std::vector<double> alpha;  // filled once responses are aggregated
};

/// Overrides the learned routing for one step (topology simulation).
struct ScriptedRoute {
  std::vector<double> logits;
  int k = 1;
};

/// Forward cache for one trajectory. Routing and aggregation alternate:
///   route() -> caller executes the selected agents -> aggregate(...)
/// and the tape retains everything backward_trajectory needs.
class RouterTape {
 public:
  RouterTape(const RouterParams& params, const RouterConfig& config, EmbeddingVector query_embedding);

  /// Runs the GRU and head on the current context and selects agents.
  const RoutingDecision& route(const std::optional<ScriptedRoute>& script = std::nullopt);

  /// Aggregates the selected agents' response embeddings (in selection
  /// order) into the next context. `survived` may be empty (all survived).
  const EmbeddingVector& aggregate(std::span<const EmbeddingVector> responses,
                                   const std::vector<bool>& survived = {});

  std::size_t steps() const noexcept { return steps_.size(); }
  const RoutingDecision& decision(std::size_t step) const { return steps_.at(step).decision; }
  /// Router input at `step` (X_1 is the query embedding).
  const EmbeddingVector& context(std::size_t step) const { return steps_.at(step).input; }
  const EmbeddingVector& current_context() const noexcept { return context_; }
  const RouterState& state() const noexcept { return state_; }

  const RouterParams& params() const noexcept { return *params_; }

 private:
  friend RouterParams backward_trajectory(const RouterTape&, std::span<const std::vector<double>>);

  struct Step {
    EmbeddingVector input;
    GruCache gru;
    RoutingDecision decision;
    bool aggregated = false;
    bool scripted = false;
    std::vector<EmbeddingVector> responses;
    std::vector<bool> survived;
  };

  const RouterParams* params_;
  RouterConfig config_;
  RouterState state_;
  EmbeddingVector context_;
  std::vector<Step> steps_;
};

/// Supplies response embeddings for the selected agents of a step
/// (0-based), in selection order.
using ResponseProvider = std::function<std::vector<EmbeddingVector>(std::size_t step, std::span<const int> selected)>;

/// Replays `steps` routing steps. The provider is queried after every step
/// except the last (the final context is never consumed). Errors carry the
/// step index.
RouterTape forward_trajectory(const EmbeddingVector& query_embedding, const ResponseProvider& responses,
                              const RouterParams& params, const RouterConfig& config, std::size_t steps);

/// Convenience: `table[step][agent]` holds every agent's response embedding.
RouterTape forward_trajectory(const EmbeddingVector& query_embedding,
                              const std::vector<std::vector<EmbeddingVector>>& table,
                              const RouterParams& params, const RouterConfig& config);

/// BPTT. `logit_gradients[i]` is dL/dz at step i (length N). Gradients flow
/// through the heads, the GRU cells, the hidden-state recurrence, and the
/// aggregation weights alpha into the previous step's kept logits; response
/// embeddings are constants. Scripted steps contribute no alpha path.
RouterParams backward_trajectory(const RouterTape& tape, std::span<const std::vector<double>> logit_gradients);

/// Parameter snapshot I/O. Binary layout (little-endian):
///   "DMOARPRM" | u32 version=1 | u64 d | u64 N | u64 seed | f64 tensors
/// in for_each_tensor order. Round-trips bitwise.
void write_params(const std::string& path, const RouterParams& params, std::uint64_t seed);

struct ParamsSnapshot {
  RouterParams params;
  std::uint64_t seed = 0;
};
ParamsSnapshot read_params(const std::string& path);

}  // namespace dmoa
