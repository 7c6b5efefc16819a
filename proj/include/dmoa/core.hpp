// SPDX-License-Identifier: Apache-2.0
#pragma once

// Domain types shared by every module: configuration, agents, prompts,
// responses and the per-query trajectory record.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dmoa {

/// Fixed-size semantic vector for a query or an aggregated context.
struct EmbeddingVector {
  std::vector<double> values;

  EmbeddingVector() = default;
  explicit EmbeddingVector(std::size_t d) : values(d, 0.0) {}
  explicit EmbeddingVector(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::span<const double> span() const noexcept { return values; }
  std::span<double> span() noexcept { return values; }

  bool operator==(const EmbeddingVector&) const = default;
};

struct RouterConfig {
  std::size_t pool_size = 0;   // N
  std::size_t max_route = 0;   // K
  double temperature = 0.1;    // tau, used only by the adaptive-k count
  std::size_t embed_dim = 384;
  std::size_t max_steps = 20;
  std::size_t train_steps = 3;
  std::uint64_t seed = 0;

  bool operator==(const RouterConfig&) const = default;
};

/// Returns `config` unchanged, or throws ConfigError naming the first
/// violated invariant.
RouterConfig validate_config(const RouterConfig& config);

struct AgentSpec {
  int agent_id = 0;
  std::string role;           // display name, metadata only
  std::string model_ref;      // backing model name or "mock"
  std::string profile_text;   // role system prompt
  std::vector<std::string> tool_names;
};

struct Prompt {
  std::string system_part;   // profile + tools + user query
  std::string context_part;  // synthesis instruction + previous responses
};

struct AgentResponse {
  int agent_id = 0;
  int step_index = 1;
  std::string text;
  std::vector<double> token_entropies;
  int token_count = 0;
  /// Absent when the backend returned no usable log-probabilities; such
  /// responses cannot serve as training targets.
  std::optional<double> predictive_entropy;

  bool operator==(const AgentResponse&) const = default;
};

struct StepRecord {
  int step_index = 1;
  std::vector<double> logits_z;
  std::vector<double> count_probs;  // softmax(z / tau)
  int k = 1;
  std::vector<int> selected_ids;
  std::vector<double> alpha;
  EmbeddingVector context_X;        // router input at this step
  std::optional<std::vector<double>> entropy_E;  // dense mode only

  bool operator==(const StepRecord&) const = default;
};

enum class Termination { Summarizer, StepLimit };

const char* to_string(Termination t) noexcept;
Termination termination_from_string(std::string_view s);

struct Trajectory {
  std::string query;
  std::vector<StepRecord> steps;
  /// Keyed by (step_index, agent_id).
  std::map<std::pair<int, int>, AgentResponse> responses;
  std::optional<std::string> final_answer;
  Termination terminated_by = Termination::StepLimit;
  std::size_t total_agent_calls = 0;
  std::size_t total_tokens = 0;

  bool operator==(const Trajectory&) const = default;
};

/// Empty trajectory for a non-empty query.
Trajectory new_trajectory(std::string query);

/// Appends a step after checking its invariants against `config`:
/// contiguous index, 1 <= k <= min(K, N), distinct ids, alpha sums to 1.
/// `executed_agents` is added to total_agent_calls.
void append_step(Trajectory& trajectory, StepRecord step,
                 const RouterConfig& config, std::size_t executed_agents);

/// Records a response and adds its token count to total_tokens.
void add_response(Trajectory& trajectory, AgentResponse response);

}  // namespace dmoa
