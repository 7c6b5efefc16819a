// SPDX-License-Identifier: Apache-2.0
#include "dmoa/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dmoa/error.hpp"

namespace dmoa {

RouterConfig validate_config(const RouterConfig& config) {
  if (config.pool_size < 1) throw ConfigError("pool size must be at least 1");
  if (config.max_route < 1) throw ConfigError("max route must be at least 1");
  if (!(config.temperature > 0.0) || !std::isfinite(config.temperature))
    throw ConfigError("temperature must be positive");
  if (config.embed_dim < 1) throw ConfigError("embedding dimension must be at least 1");
  if (config.max_steps < 1) throw ConfigError("max steps must be at least 1");
  if (config.train_steps < 1) throw ConfigError("train steps must be at least 1");
  return config;
}

const char* to_string(Termination t) noexcept {
  return t == Termination::Summarizer ? "Summarizer" : "StepLimit";
}

Termination termination_from_string(std::string_view s) {
  if (s == "Summarizer") return Termination::Summarizer;
  if (s == "StepLimit") return Termination::StepLimit;
  throw Error("unknown termination kind '" + std::string(s) + "'");
}

Trajectory new_trajectory(std::string query) {
  if (query.empty()) throw Error("query must be non-empty");
  Trajectory t;
  t.query = std::move(query);
  return t;
}

void append_step(Trajectory& trajectory, StepRecord step,
                 const RouterConfig& config, std::size_t executed_agents) {
  const int expected = static_cast<int>(trajectory.steps.size()) + 1;
  if (step.step_index != expected)
    throw Error("step index " + std::to_string(step.step_index) + " is not contiguous (expected " +
                std::to_string(expected) + ")");
  const auto k_max = static_cast<int>(std::min(config.max_route, config.pool_size));
  if (step.k < 1 || step.k > k_max)
    throw Error("step " + std::to_string(step.step_index) + ": k=" + std::to_string(step.k) +
                " outside [1, " + std::to_string(k_max) + "]");
  if (step.selected_ids.size() != static_cast<std::size_t>(step.k) ||
      step.alpha.size() != static_cast<std::size_t>(step.k))
    throw Error("step " + std::to_string(step.step_index) + ": k, selected ids and alpha disagree");
  std::set<int> seen(step.selected_ids.begin(), step.selected_ids.end());
  if (seen.size() != step.selected_ids.size())
    throw Error("step " + std::to_string(step.step_index) + ": selected ids are not distinct");
  double sum = 0.0;
  for (double a : step.alpha) sum += a;
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error("step " + std::to_string(step.step_index) + ": alpha does not sum to 1");
  trajectory.steps.push_back(std::move(step));
  trajectory.total_agent_calls += executed_agents;
}

void add_response(Trajectory& trajectory, AgentResponse response) {
  trajectory.total_tokens += static_cast<std::size_t>(response.token_count);
  auto key = std::make_pair(response.step_index, response.agent_id);
  trajectory.responses.insert_or_assign(key, std::move(response));
}

}  // namespace dmoa
