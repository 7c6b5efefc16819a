// SPDX-License-Identifier: Apache-2.0
#pragma once

// Top-level loops: dense training with entropy supervision, sparse
// inference with summarizer termination, test-time training, and scripted
// topology simulation.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dmoa/agents.hpp"
#include "dmoa/core.hpp"
#include "dmoa/embed.hpp"
#include "dmoa/learning.hpp"
#include "dmoa/router.hpp"

namespace dmoa {

/// Everything a rollout needs besides router parameters.
struct Runtime {
  std::vector<AgentSpec> agents;  // ids 0..N-1
  const Embedder* embedder = nullptr;
  const AgentBackend* backend = nullptr;
  const Summarizer* summarizer = nullptr;
};

struct TrainOptions {
  std::size_t batch_size = 8;
  std::size_t epochs = 3;
  LossKind loss = LossKind::Ranking;
  AdamWHyper hyper;
};

enum class Topology { Chain, Star, Complete, Moa };

Topology topology_from_string(std::string_view name);
const char* to_string(Topology t) noexcept;

/// Executed agent set at 1-based `step`:
///   chain    {(step-1) mod N}
///   star     hub {0} on odd steps, spokes {1..N-1} on even steps
///   complete / moa  every agent
std::vector<int> topology_schedule(Topology topology, std::size_t pool_size, int step);

enum class RolloutMode { Sparse, Dense };

struct RolloutOptions {
  RolloutMode mode = RolloutMode::Sparse;
  std::size_t max_steps = 1;
  bool summarize = true;                 // false: run exactly max_steps, no answer
  std::optional<Topology> topology;      // scripted routing
};

/// One query's record plus the router tape for backpropagation.
struct Rollout {
  Trajectory trajectory;
  RouterTape tape;
  std::vector<std::vector<double>> entropies;  // dense mode, per step
};

/// Seed for one agent call, derived from the run seed, query, step and id.
std::uint64_t agent_call_seed(std::uint64_t root, std::string_view query, int step, int agent_id);

/// Routes, executes (selected agents in sparse mode, all N in dense mode),
/// aggregates the routed responses, and optionally consults the summarizer.
/// Sparse mode tolerates individual agent failures by renormalizing alpha
/// over survivors; dense mode and all-failed steps throw.
Rollout run_query(const Runtime& runtime, const std::string& query, const RouterParams& params,
                  const RouterConfig& config, const RolloutOptions& options);

/// Sparse inference: up to L_max steps, summarizer termination, forced
/// final answer at the step limit.
Trajectory infer(const Runtime& runtime, const std::string& query, const RouterParams& params,
                 const RouterConfig& config);

struct BatchRow {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double loss = 0.0;
};

struct TrainReport {
  std::vector<double> epoch_mean_loss;
  std::vector<BatchRow> batches;
  /// Per epoch, mean loss at each reasoning step.
  std::vector<std::vector<double>> step_loss_curves;
  std::size_t optimizer_steps = 0;
  /// Final-epoch fraction of steps whose routed set lies within the k
  /// lowest-entropy agents.
  double routing_agreement = 0.0;
  std::string params_path;
};

/// True when every selected id has entropy no larger than the k-th
/// smallest entry of `entropies`.
bool selection_agrees(std::span<const int> selected, std::span<const double> entropies);

/// Dense training: per query, L_train dense steps; one AdamW step per
/// batch on the mean of per-query step-averaged losses, after clipping.
/// `state` carries optimizer moments across calls.
TrainReport train(const Runtime& runtime, const std::vector<std::string>& queries, RouterParams& params,
                  OptimizerState& state, const RouterConfig& config, const TrainOptions& options);

/// Gradient of the batch loss, mean over rollouts of the step-averaged loss.
/// Returns the loss value and fills `grads`.
double batch_gradient(const std::vector<Rollout>& rollouts, LossKind loss, RouterParams& grads,
                      std::vector<double>* step_losses = nullptr);

struct TttResult {
  std::vector<Trajectory> trajectories;  // dense phase first, then sparse
  TrainReport report;
  std::vector<std::string> warnings;
};

/// First `t_dense` queries run in dense mode (with answers) under the
/// incoming params. The router is then updated as in train: options.epochs
/// batched passes over those queries, replaying the router on the recorded
/// responses of all N agents. Remaining queries use sparse inference with
/// the adapted params. Accepts t_dense in [1, 30]; below 10 adds a warning.
TttResult test_time_train(const Runtime& runtime, const std::vector<std::string>& stream, RouterParams& params,
                          const RouterConfig& config, const TrainOptions& options, std::size_t t_dense);

/// Dense evaluation of routing quality without updating anything: mean of
/// selection_agrees over `steps` steps of every query.
double routing_agreement(const Runtime& runtime, const std::vector<std::string>& queries,
                         const RouterParams& params, const RouterConfig& config, std::size_t steps);

/// Runs a scripted topology for config.max_steps steps.
Trajectory simulate(const Runtime& runtime, const std::string& query, const RouterParams& params,
                    const RouterConfig& config, Topology topology);

/// Structural check of a simulated trace: executed sets follow the
/// schedule, response keys equal the executed sets, and each step's
/// context is the alpha-weighted sum of the previous step's executed
/// responses (re-embedded) within `tol`. Returns human-readable problems.
std::vector<std::string> verify_topology(const Trajectory& trajectory, Topology topology, std::size_t pool_size,
                                         const Embedder& embedder, double tol = 1e-12);

}  // namespace dmoa
