// SPDX-License-Identifier: Apache-2.0
#include "dmoa/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "dmoa/error.hpp"
#include "dmoa/seed.hpp"

namespace dmoa {

Topology topology_from_string(std::string_view name) {
  if (name == "chain") return Topology::Chain;
  if (name == "star") return Topology::Star;
  if (name == "complete") return Topology::Complete;
  if (name == "moa") return Topology::Moa;
  throw ConfigError("unknown topology '" + std::string(name) + "' (expected chain, star, complete or moa)");
}

const char* to_string(Topology t) noexcept {
  switch (t) {
    case Topology::Chain: return "chain";
    case Topology::Star: return "star";
    case Topology::Complete: return "complete";
    case Topology::Moa: return "moa";
  }
  return "?";
}

std::vector<int> topology_schedule(Topology topology, std::size_t pool_size, int step) {
  const int n = static_cast<int>(pool_size);
  std::vector<int> out;
  switch (topology) {
    case Topology::Chain:
      out.push_back((step - 1) % n);
      break;
    case Topology::Star:
      if (step % 2 == 1 || n == 1) {
        out.push_back(0);
      } else {
        for (int a = 1; a < n; ++a) out.push_back(a);
      }
      break;
    case Topology::Complete:
    case Topology::Moa:
      for (int a = 0; a < n; ++a) out.push_back(a);
      break;
  }
  return out;
}

std::uint64_t agent_call_seed(std::uint64_t root, std::string_view query, int step, int agent_id) {
  std::uint64_t s = derive_seed(root, "agents");
  s = derive_seed(s, query);
  s = derive_seed(s, static_cast<std::uint64_t>(step));
  return derive_seed(s, static_cast<std::uint64_t>(agent_id));
}

namespace {

struct CallResult {
  std::optional<AgentResponse> response;
  std::string error;
};

// Concurrent fan-out; results come back in the order of `ids`.
std::vector<CallResult> fan_out(const Runtime& rt, std::span<const int> ids, const std::string& query,
                                const std::string& tag, std::span<const AgentResponse> prev, int step,
                                std::uint64_t root_seed) {
  std::vector<CallResult> results(ids.size());
  const auto n = static_cast<std::int64_t>(ids.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& agent = rt.agents[static_cast<std::size_t>(ids[i])];
    try {
      const Prompt prompt = assemble_prompt(agent, query, prev);
      results[i].response = rt.backend->execute(agent, prompt, query, tag,
                                                agent_call_seed(root_seed, query, step, agent.agent_id), step);
    } catch (const std::exception& e) {
      results[i].error = e.what();
    }
  }
  return results;
}

void check_runtime(const Runtime& rt, const RouterConfig& config) {
  if (!rt.embedder || !rt.backend) throw ConfigError("runtime needs an embedder and an agent backend");
  if (rt.agents.size() != config.pool_size)
    throw ConfigError("pool has " + std::to_string(rt.agents.size()) + " agents but N=" +
                      std::to_string(config.pool_size));
  for (std::size_t i = 0; i < rt.agents.size(); ++i)
    if (rt.agents[i].agent_id != static_cast<int>(i))
      throw ConfigError("agent ids must be dense and ordered (entry " + std::to_string(i) + ")");
  if (rt.embedder->dim() != config.embed_dim) throw ConfigError("embedder dimension does not match d");
}

ScriptedRoute scripted_route(const std::vector<int>& members, std::size_t pool_size) {
  ScriptedRoute s;
  s.logits.assign(pool_size, 0.0);
  for (int a : members) s.logits[static_cast<std::size_t>(a)] = 1.0;
  s.k = static_cast<int>(members.size());
  return s;
}

}  // namespace

Rollout run_query(const Runtime& rt, const std::string& query, const RouterParams& params,
                  const RouterConfig& config, const RolloutOptions& options) {
  check_runtime(rt, config);
  if (options.summarize && !rt.summarizer) throw ConfigError("runtime has no summarizer");
  if (options.max_steps < 1) throw ConfigError("rollout needs at least one step");

  // A scripted topology may route more than K agents.
  RouterConfig step_config = config;
  if (options.topology) step_config.max_route = config.pool_size;

  Rollout out{new_trajectory(query), RouterTape(params, step_config, rt.embedder->embed(query)), {}};
  Trajectory& traj = out.trajectory;
  const std::string tag = task_tag_of(query);
  const bool dense = options.mode == RolloutMode::Dense;
  std::vector<AgentResponse> prev;

  for (std::size_t i = 1; i <= options.max_steps; ++i) {
    const int step = static_cast<int>(i);
    const EmbeddingVector input = out.tape.current_context();
    std::optional<ScriptedRoute> script;
    if (options.topology)
      script = scripted_route(topology_schedule(*options.topology, config.pool_size, step), config.pool_size);
    const RoutingDecision decision = out.tape.route(script);

    std::vector<int> executed = decision.selected_ids;
    if (dense) {
      executed.resize(config.pool_size);
      for (std::size_t a = 0; a < config.pool_size; ++a) executed[a] = static_cast<int>(a);
    }
    auto results = fan_out(rt, executed, query, tag, prev, step, config.seed);

    std::vector<double> entropy;
    if (dense) {
      entropy.resize(config.pool_size);
      for (std::size_t a = 0; a < results.size(); ++a) {
        if (!results[a].response)
          throw Error("step " + std::to_string(step) + ": agent " + std::to_string(a) + " failed in dense mode: " +
                      results[a].error);
        if (!results[a].response->predictive_entropy)
          throw Error("step " + std::to_string(step) + ": agent " + std::to_string(a) +
                      " returned no log-probabilities; cannot build an entropy target");
        entropy[a] = *results[a].response->predictive_entropy;
      }
    }

    // Routed responses in selection order; in dense mode they are a subset
    // of `results`, which is indexed by agent id.
    std::vector<AgentResponse> routed;
    std::vector<EmbeddingVector> embeddings;
    std::vector<bool> survived;
    std::string first_error;
    for (int id : decision.selected_ids) {
      const CallResult& r = dense ? results[static_cast<std::size_t>(id)]
                                  : results[static_cast<std::size_t>(
                                        std::find(executed.begin(), executed.end(), id) - executed.begin())];
      if (r.response) {
        embeddings.push_back(rt.embedder->embed(r.response->text));
        routed.push_back(*r.response);
        survived.push_back(true);
      } else {
        embeddings.emplace_back(config.embed_dim);
        survived.push_back(false);
        if (first_error.empty()) first_error = r.error;
      }
    }
    if (routed.empty())
      throw Error("step " + std::to_string(step) + ": every selected agent failed (" + first_error + ")");

    out.tape.aggregate(embeddings, survived);

    StepRecord rec;
    rec.step_index = step;
    rec.logits_z = decision.logits_z;
    rec.count_probs = decision.count_probs;
    rec.k = decision.k;
    rec.selected_ids = decision.selected_ids;
    rec.alpha = out.tape.decision(i - 1).alpha;
    rec.context_X = input;
    if (dense) rec.entropy_E = entropy;
    append_step(traj, std::move(rec), step_config, executed.size());
    for (auto& r : results)
      if (r.response) add_response(traj, std::move(*r.response));
    if (dense) out.entropies.push_back(std::move(entropy));

    if (options.summarize) {
      const bool last = i == options.max_steps;
      const auto decisionS = rt.summarizer->decide(query, routed, step, last);
      if (decisionS.is_final && !last) {
        traj.final_answer = decisionS.answer;
        traj.terminated_by = Termination::Summarizer;
        break;
      }
      if (last) {
        traj.final_answer = decisionS.is_final ? decisionS.answer : decisionS.reply;
        traj.terminated_by = Termination::StepLimit;
      }
    }
    prev = std::move(routed);
  }
  return out;
}

Trajectory infer(const Runtime& runtime, const std::string& query, const RouterParams& params,
                 const RouterConfig& config) {
  RolloutOptions opt;
  opt.mode = RolloutMode::Sparse;
  opt.max_steps = config.max_steps;
  opt.summarize = true;
  return run_query(runtime, query, params, config, opt).trajectory;
}

bool selection_agrees(std::span<const int> selected, std::span<const double> entropies) {
  if (selected.empty() || selected.size() > entropies.size()) return false;
  std::vector<double> sorted(entropies.begin(), entropies.end());
  std::sort(sorted.begin(), sorted.end());
  const double kth = sorted[selected.size() - 1];
  return std::all_of(selected.begin(), selected.end(),
                     [&](int id) { return entropies[static_cast<std::size_t>(id)] <= kth; });
}

double batch_gradient(const std::vector<Rollout>& rollouts, LossKind loss, RouterParams& grads,
                      std::vector<double>* step_losses) {
  if (rollouts.empty()) throw Error("empty batch");
  const double inv_batch = 1.0 / static_cast<double>(rollouts.size());
  double batch_loss = 0.0;
  for (const auto& ro : rollouts) {
    const std::size_t steps = ro.entropies.size();
    if (steps == 0 || steps != ro.tape.steps()) throw Error("rollout has no entropy targets");
    std::vector<double> losses(steps);
    std::vector<std::vector<double>> dz(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      auto v = step_loss(loss, ro.tape.decision(i).logits_z, ro.entropies[i]);
      losses[i] = v.loss;
      dz[i] = std::move(v.grad);
      const double scale = inv_batch / static_cast<double>(steps);
      for (double& g : dz[i]) g *= scale;
      if (step_losses) {
        if (step_losses->size() < steps) step_losses->resize(steps, 0.0);
        (*step_losses)[i] += v.loss;
      }
    }
    batch_loss += total_loss(losses) * inv_batch;
    const RouterParams g = backward_trajectory(ro.tape, dz);
    std::vector<std::span<double>> dst;
    grads.for_each_tensor([&](std::string_view, std::span<double> t) { dst.push_back(t); });
    std::size_t k = 0;
    g.for_each_tensor([&](std::string_view, std::span<const double> t) {
      for (std::size_t i = 0; i < t.size(); ++i) dst[k][i] += t[i];
      ++k;
    });
  }
  return batch_loss;
}

namespace {

// One pass of batched updates over dense rollouts produced by `make`.
template <typename MakeRollout>
void run_epoch(std::size_t epoch, std::size_t count, const TrainOptions& options, RouterParams& params,
               OptimizerState& state, TrainReport& report, MakeRollout&& make, std::size_t& agree,
               std::size_t& total_steps) {
  if (options.batch_size < 1) throw ConfigError("batch size must be at least 1");
  double epoch_loss = 0.0;
  std::vector<double> step_sum;
  std::vector<std::size_t> step_count;
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < count; start += options.batch_size, ++batch_index) {
    const std::size_t end = std::min(count, start + options.batch_size);
    std::vector<Rollout> rollouts;
    rollouts.reserve(end - start);
    for (std::size_t q = start; q < end; ++q) {
      try {
        rollouts.push_back(make(q));
      } catch (const Error& e) {
        throw Error("query " + std::to_string(q) + ": " + e.what());
      }
    }
    RouterParams grads = RouterParams::zeros(params.dim, params.pool_size);
    std::vector<double> per_step;
    const double loss = batch_gradient(rollouts, options.loss, grads, &per_step);
    clip_gradients(grads, options.hyper.clip_norm);
    adamw_step(params, grads, state);
    ++report.optimizer_steps;
    report.batches.push_back({epoch, batch_index, loss});
    epoch_loss += loss * static_cast<double>(end - start);

    for (const auto& ro : rollouts) {
      for (std::size_t i = 0; i < ro.entropies.size(); ++i) {
        if (step_count.size() <= i) {
          step_count.resize(i + 1, 0);
          step_sum.resize(i + 1, 0.0);
        }
        ++step_count[i];
        ++total_steps;
        if (selection_agrees(ro.tape.decision(i).selected_ids, ro.entropies[i])) ++agree;
      }
    }
    for (std::size_t i = 0; i < per_step.size(); ++i) step_sum[i] += per_step[i];
  }
  for (std::size_t i = 0; i < step_sum.size(); ++i) step_sum[i] /= static_cast<double>(step_count[i]);
  report.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(count));
  report.step_loss_curves.push_back(std::move(step_sum));
}

}  // namespace

TrainReport train(const Runtime& runtime, const std::vector<std::string>& queries, RouterParams& params,
                  OptimizerState& state, const RouterConfig& config, const TrainOptions& options) {
  if (queries.empty()) throw Error("training needs at least one query");
  check_runtime(runtime, config);
  TrainReport report;
  RolloutOptions ro;
  ro.mode = RolloutMode::Dense;
  ro.max_steps = config.train_steps;
  ro.summarize = false;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::size_t agree = 0, total = 0;
    run_epoch(epoch, queries.size(), options, params, state, report,
              [&](std::size_t q) { return run_query(runtime, queries[q], params, config, ro); }, agree, total);
    report.routing_agreement = total ? static_cast<double>(agree) / static_cast<double>(total) : 0.0;
  }
  return report;
}

TttResult test_time_train(const Runtime& runtime, const std::vector<std::string>& stream, RouterParams& params,
                          const RouterConfig& config, const TrainOptions& options, std::size_t t_dense) {
  if (t_dense < 1 || t_dense > 30) throw ConfigError("t_dense must lie in [1, 30], got " + std::to_string(t_dense));
  if (stream.size() < t_dense)
    throw ConfigError("query stream has " + std::to_string(stream.size()) + " queries, fewer than t_dense=" +
                      std::to_string(t_dense));
  check_runtime(runtime, config);
  TttResult out;
  if (t_dense < 10) out.warnings.push_back("t_dense=" + std::to_string(t_dense) + " is below the usual 10-30 range");

  // Dense phase: every agent runs at every step and the summarizer still
  // answers. All N responses are recorded, so the update passes can replay
  // the router on them without calling the agents again.
  RolloutOptions dense;
  dense.mode = RolloutMode::Dense;
  dense.max_steps = config.max_steps;
  dense.summarize = true;
  struct Recorded {
    EmbeddingVector query;
    std::vector<std::vector<EmbeddingVector>> table;  // [step][agent]
    std::vector<std::vector<double>> entropies;
  };
  std::vector<Recorded> recorded;
  for (std::size_t q = 0; q < t_dense; ++q) {
    Rollout r = [&] {
      try {
        return run_query(runtime, stream[q], params, config, dense);
      } catch (const Error& e) {
        throw Error("query " + std::to_string(q) + ": " + e.what());
      }
    }();
    Recorded rec{runtime.embedder->embed(stream[q]), {}, std::move(r.entropies)};
    for (const auto& st : r.trajectory.steps) {
      std::vector<EmbeddingVector> row;
      for (std::size_t a = 0; a < config.pool_size; ++a)
        row.push_back(runtime.embedder->embed(r.trajectory.responses.at({st.step_index, static_cast<int>(a)}).text));
      rec.table.push_back(std::move(row));
    }
    recorded.push_back(std::move(rec));
    out.trajectories.push_back(std::move(r.trajectory));
  }

  OptimizerState state = OptimizerState::for_params(params, options.hyper);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::size_t agree = 0, total = 0;
    run_epoch(epoch, t_dense, options, params, state, out.report,
              [&](std::size_t q) {
                const Recorded& rec = recorded[q];
                return Rollout{out.trajectories[q], forward_trajectory(rec.query, rec.table, params, config),
                               rec.entropies};
              },
              agree, total);
    out.report.routing_agreement = total ? static_cast<double>(agree) / static_cast<double>(total) : 0.0;
  }

  for (std::size_t q = t_dense; q < stream.size(); ++q) {
    try {
      out.trajectories.push_back(infer(runtime, stream[q], params, config));
    } catch (const Error& e) {
      throw Error("query " + std::to_string(q) + ": " + e.what());
    }
  }
  return out;
}

double routing_agreement(const Runtime& runtime, const std::vector<std::string>& queries,
                         const RouterParams& params, const RouterConfig& config, std::size_t steps) {
  RolloutOptions ro;
  ro.mode = RolloutMode::Dense;
  ro.max_steps = steps;
  ro.summarize = false;
  std::size_t agree = 0, total = 0;
  for (const auto& q : queries) {
    const auto r = run_query(runtime, q, params, config, ro);
    for (std::size_t i = 0; i < r.entropies.size(); ++i) {
      ++total;
      if (selection_agrees(r.tape.decision(i).selected_ids, r.entropies[i])) ++agree;
    }
  }
  return total ? static_cast<double>(agree) / static_cast<double>(total) : 0.0;
}

Trajectory simulate(const Runtime& runtime, const std::string& query, const RouterParams& params,
                    const RouterConfig& config, Topology topology) {
  RolloutOptions ro;
  ro.mode = RolloutMode::Sparse;
  ro.max_steps = config.max_steps;
  ro.summarize = false;
  ro.topology = topology;
  auto r = run_query(runtime, query, params, config, ro);
  Trajectory t = std::move(r.trajectory);
  if (runtime.summarizer) {
    std::vector<AgentResponse> last;
    const int step = static_cast<int>(t.steps.size());
    for (int id : t.steps.back().selected_ids) {
      const auto it = t.responses.find({step, id});
      if (it != t.responses.end()) last.push_back(it->second);
    }
    const auto d = runtime.summarizer->decide(query, last, step, true);
    t.final_answer = d.is_final ? d.answer : d.reply;
    t.terminated_by = Termination::StepLimit;
  }
  return t;
}

std::vector<std::string> verify_topology(const Trajectory& t, Topology topology, std::size_t pool_size,
                                         const Embedder& embedder, double tol) {
  std::vector<std::string> problems;
  auto report = [&](int step, const std::string& what) {
    problems.push_back("step " + std::to_string(step) + ": " + what);
  };
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    const int step = s.step_index;
    auto expected = topology_schedule(topology, pool_size, step);
    auto got = s.selected_ids;
    std::sort(got.begin(), got.end());
    if (got != expected) report(step, "executed set does not follow the schedule");
    std::vector<int> keys;
    for (const auto& [key, r] : t.responses)
      if (key.first == step) keys.push_back(key.second);
    if (keys != expected) report(step, "responses do not match the executed set");

    EmbeddingVector want;
    if (i == 0) {
      want = embedder.embed(t.query);
    } else {
      const auto& p = t.steps[i - 1];
      want = EmbeddingVector(s.context_X.size());
      for (std::size_t j = 0; j < p.selected_ids.size(); ++j) {
        const auto it = t.responses.find({p.step_index, p.selected_ids[j]});
        if (it == t.responses.end()) {
          report(step, "missing previous-step response for agent " + std::to_string(p.selected_ids[j]));
          continue;
        }
        const auto e = embedder.embed(it->second.text);
        for (std::size_t c = 0; c < want.size(); ++c) want[c] += p.alpha[j] * e[c];
      }
    }
    if (want.size() != s.context_X.size()) {
      report(step, "context length mismatch");
      continue;
    }
    for (std::size_t c = 0; c < want.size(); ++c) {
      if (std::abs(want[c] - s.context_X[c]) > tol) {
        report(step, "context is not the weighted sum of the previous step's executed responses");
        break;
      }
    }
  }
  return problems;
}

}  // namespace dmoa
