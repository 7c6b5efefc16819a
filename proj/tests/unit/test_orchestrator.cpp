// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <omp.h>

#include <cmath>
#include <numeric>

#include "dmoa/error.hpp"
#include "dmoa/orchestrator.hpp"
#include "dmoa/synthetic.hpp"

namespace {

namespace syn = dmoa::synthetic;

struct Fixture {
  syn::Pool pool;
  dmoa::HashEmbedder embedder{64};
  std::unique_ptr<dmoa::MockBackend> backend;
  dmoa::MockSummarizer summarizer;
  dmoa::Runtime runtime;
  dmoa::RouterConfig config;

  explicit Fixture(std::size_t n = 8, std::size_t k = 4, int final_at = 0)
      : pool(syn::make_pool(n, {syn::routing_family()})), summarizer(final_at) {
    backend = std::make_unique<dmoa::MockBackend>(pool.profiles);
    runtime = {pool.agents, &embedder, backend.get(), &summarizer};
    config.pool_size = n;
    config.max_route = k;
    config.embed_dim = 64;
    config.max_steps = 6;
    config.train_steps = 3;
    config.seed = 31;
  }
  void rebuild_backend() {
    backend = std::make_unique<dmoa::MockBackend>(pool.profiles);
    runtime.backend = backend.get();
  }
  dmoa::RouterParams params() const { return dmoa::RouterParams::initialize(64, config.pool_size, 9); }
};

TEST(Topology, Schedules) {
  using dmoa::Topology;
  for (int s = 1; s <= 4; ++s)
    EXPECT_EQ(dmoa::topology_schedule(Topology::Chain, 4, s), (std::vector<int>{s - 1}));
  EXPECT_EQ(dmoa::topology_schedule(Topology::Chain, 4, 5), (std::vector<int>{0}));
  EXPECT_EQ(dmoa::topology_schedule(Topology::Star, 4, 1), (std::vector<int>{0}));
  EXPECT_EQ(dmoa::topology_schedule(Topology::Star, 4, 2), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(dmoa::topology_schedule(Topology::Complete, 4, 3), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(dmoa::topology_schedule(Topology::Moa, 4, 3), dmoa::topology_schedule(Topology::Complete, 4, 3));
  EXPECT_THROW(dmoa::topology_from_string("ring"), dmoa::ConfigError);
}

TEST(Rollout, SparseExecutesOnlySelectedAgents) {
  Fixture f;
  const auto t = dmoa::infer(f.runtime, "#algebra solve it", f.params(), f.config);
  std::size_t sum_k = 0;
  for (const auto& s : t.steps) {
    sum_k += static_cast<std::size_t>(s.k);
    for (int id : s.selected_ids) EXPECT_TRUE(t.responses.count({s.step_index, id}));
    EXPECT_FALSE(s.entropy_E);
    EXPECT_NEAR(std::accumulate(s.alpha.begin(), s.alpha.end(), 0.0), 1.0, 1e-12);
  }
  EXPECT_EQ(t.total_agent_calls, sum_k);
  EXPECT_EQ(t.responses.size(), sum_k);
  EXPECT_LT(sum_k, f.config.pool_size * t.steps.size());
  EXPECT_EQ(t.steps.size(), f.config.max_steps);
  EXPECT_EQ(t.terminated_by, dmoa::Termination::StepLimit);
  ASSERT_TRUE(t.final_answer);
}

TEST(Rollout, DenseExecutesEveryAgent) {
  Fixture f;
  dmoa::RolloutOptions o;
  o.mode = dmoa::RolloutMode::Dense;
  o.max_steps = 4;
  o.summarize = false;
  const auto r = dmoa::run_query(f.runtime, "#coding fix the bug", f.params(), f.config, o);
  EXPECT_EQ(r.trajectory.total_agent_calls, 8U * 4U);
  EXPECT_EQ(r.entropies.size(), 4U);
  EXPECT_FALSE(r.trajectory.final_answer);
  for (const auto& s : r.trajectory.steps) ASSERT_TRUE(s.entropy_E);
  // Designated coding agents are the confident ones.
  EXPECT_LT(r.entropies[0][1], 1.0);
  EXPECT_LT(r.entropies[0][4], 1.0);
  EXPECT_GT(r.entropies[0][0], 1.0);
}

TEST(Rollout, RouterInputIsPreviousAggregate) {
  Fixture f;
  const auto params = f.params();
  dmoa::RolloutOptions o;
  o.max_steps = 3;
  o.summarize = false;
  const auto r = dmoa::run_query(f.runtime, "#history when", params, f.config, o);
  const auto& t = r.trajectory;
  EXPECT_EQ(t.steps[0].context_X, f.embedder.embed("#history when"));
  for (std::size_t i = 1; i < t.steps.size(); ++i) {
    const auto& prev = t.steps[i - 1];
    dmoa::EmbeddingVector want(64);
    for (std::size_t j = 0; j < prev.selected_ids.size(); ++j) {
      const auto e = f.embedder.embed(t.responses.at({prev.step_index, prev.selected_ids[j]}).text);
      for (std::size_t c = 0; c < 64; ++c) want[c] += prev.alpha[j] * e[c];
    }
    for (std::size_t c = 0; c < 64; ++c) EXPECT_NEAR(t.steps[i].context_X[c], want[c], 1e-14);
  }
}

TEST(Rollout, SummarizerStopsEarly) {
  Fixture f(8, 4, 2);
  const auto t = dmoa::infer(f.runtime, "#geometry area", f.params(), f.config);
  EXPECT_EQ(t.steps.size(), 2U);
  EXPECT_EQ(t.terminated_by, dmoa::Termination::Summarizer);
  ASSERT_TRUE(t.final_answer);
  EXPECT_NE(t.final_answer->find("on geometry, step 2"), std::string::npos);
}

TEST(Rollout, DenseLimitReachableWhenKEqualsN) {
  Fixture f(6, 6);
  const auto flat = dmoa::RouterParams::zeros(64, 6);  // equal logits: every agent clears 1/N
  const auto t = dmoa::infer(f.runtime, "#algebra x", flat, f.config);
  for (const auto& s : t.steps) EXPECT_EQ(s.k, 6);
  EXPECT_EQ(t.total_agent_calls, 6U * t.steps.size());
}

TEST(Rollout, SparseFailuresRenormalizeOverSurvivors) {
  Fixture f(4, 4);
  const auto flat = dmoa::RouterParams::zeros(64, 4);
  f.pool.profiles[2].fail_steps = {1};
  f.rebuild_backend();
  dmoa::RolloutOptions o;
  o.max_steps = 2;
  o.summarize = false;
  const auto r = dmoa::run_query(f.runtime, "#algebra x", flat, f.config, o);
  const auto& s = r.trajectory.steps[0];
  EXPECT_EQ(s.selected_ids, (std::vector<int>{0, 1, 2, 3}));
  const std::vector<double> want = {1.0 / 3.0, 1.0 / 3.0, 0.0, 1.0 / 3.0};
  ASSERT_EQ(s.alpha.size(), 4U);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(s.alpha[j], want[j], 1e-15);
  EXPECT_FALSE(r.trajectory.responses.count({1, 2}));

  o.mode = dmoa::RolloutMode::Dense;
  EXPECT_THROW(dmoa::run_query(f.runtime, "#algebra x", flat, f.config, o), dmoa::Error);

  for (auto& p : f.pool.profiles) p.fail_steps = {1};
  f.rebuild_backend();
  o.mode = dmoa::RolloutMode::Sparse;
  EXPECT_THROW(dmoa::run_query(f.runtime, "#algebra x", flat, f.config, o), dmoa::Error);
}

TEST(Rollout, DeterministicAcrossThreadCounts) {
  Fixture f;
  const auto params = f.params();
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto a = dmoa::infer(f.runtime, "#coding q", params, f.config);
  omp_set_num_threads(4);
  const auto b = dmoa::infer(f.runtime, "#coding q", params, f.config);
  omp_set_num_threads(saved);
  EXPECT_EQ(a, b);
}

TEST(Rollout, RuntimeMismatchIsAConfigError) {
  Fixture f;
  auto cfg = f.config;
  cfg.pool_size = 7;
  cfg.max_route = 3;
  EXPECT_THROW(dmoa::infer(f.runtime, "q", dmoa::RouterParams::initialize(64, 7, 1), cfg), dmoa::ConfigError);
}

TEST(Agreement, SelectionWithinLowestEntropies) {
  const std::vector<double> e = {0.5, 0.1, 2.0, 0.3};
  EXPECT_TRUE(dmoa::selection_agrees(std::vector<int>{1}, e));
  EXPECT_TRUE(dmoa::selection_agrees(std::vector<int>{3, 1}, e));
  EXPECT_FALSE(dmoa::selection_agrees(std::vector<int>{0, 1}, e));
  EXPECT_FALSE(dmoa::selection_agrees(std::vector<int>{2}, e));
  EXPECT_FALSE(dmoa::selection_agrees(std::vector<int>{}, e));
}

TEST(Train, ReportShapesAndLearning) {
  Fixture f;
  auto params = f.params();
  const auto queries = syn::make_queries(syn::routing_family(), 40, 1);
  dmoa::TrainOptions o;
  o.epochs = 2;
  o.hyper.lr = 1e-2;
  auto state = dmoa::OptimizerState::for_params(params, o.hyper);
  const auto report = dmoa::train(f.runtime, queries, params, state, f.config, o);
  EXPECT_EQ(report.optimizer_steps, 10U);
  EXPECT_EQ(report.batches.size(), 10U);
  EXPECT_EQ(report.epoch_mean_loss.size(), 2U);
  EXPECT_EQ(report.step_loss_curves.size(), 2U);
  EXPECT_EQ(report.step_loss_curves[0].size(), 3U);
  EXPECT_LT(report.epoch_mean_loss[1], report.epoch_mean_loss[0]);
  EXPECT_GE(report.routing_agreement, 0.0);
  EXPECT_LE(report.routing_agreement, 1.0);
  EXPECT_EQ(state.step_count, 10U);
}

TEST(Train, EmptyQueriesAreRejected) {
  Fixture f;
  auto params = f.params();
  auto state = dmoa::OptimizerState::for_params(params, {});
  EXPECT_THROW(dmoa::train(f.runtime, {}, params, state, f.config, {}), dmoa::Error);
}

TEST(Ttt, PreconditionsAndWarnings) {
  Fixture f;
  auto params = f.params();
  const auto stream = syn::make_queries(syn::routing_family(), 12, 4);
  EXPECT_THROW(dmoa::test_time_train(f.runtime, stream, params, f.config, {}, 0), dmoa::ConfigError);
  EXPECT_THROW(dmoa::test_time_train(f.runtime, stream, params, f.config, {}, 31), dmoa::ConfigError);
  EXPECT_THROW(dmoa::test_time_train(f.runtime, stream, params, f.config, {}, 13), dmoa::ConfigError);
  dmoa::TrainOptions o;
  o.epochs = 1;
  const auto before = params;
  const auto r = dmoa::test_time_train(f.runtime, stream, params, f.config, o, 5);
  ASSERT_EQ(r.warnings.size(), 1U);
  EXPECT_EQ(r.trajectories.size(), 12U);
  EXPECT_EQ(r.report.optimizer_steps, 1U);
  EXPECT_NE(params, before);
  for (std::size_t q = 0; q < 12; ++q) {
    EXPECT_TRUE(r.trajectories[q].final_answer);
    EXPECT_EQ(r.trajectories[q].steps[0].entropy_E.has_value(), q < 5);
  }
}

TEST(Ttt, ReplayMatchesFreshDenseRollout) {
  // One epoch with batch = t_dense: the update must equal one train() step
  // on the same queries, since mock outputs do not depend on routing.
  Fixture f;
  auto cfg = f.config;
  cfg.train_steps = cfg.max_steps;
  const auto stream = syn::make_queries(syn::routing_family(), 10, 6);
  dmoa::TrainOptions o;
  o.epochs = 1;
  o.batch_size = 10;
  auto a = f.params(), b = f.params();
  dmoa::test_time_train(f.runtime, stream, a, cfg, o, 10);
  auto state = dmoa::OptimizerState::for_params(b, o.hyper);
  dmoa::train(f.runtime, stream, b, state, cfg, o);
  EXPECT_EQ(a, b);
}

TEST(Simulate, ChainStarCompleteAndMoa) {
  Fixture f(4, 2);
  f.config.max_steps = 4;
  const auto params = dmoa::RouterParams::initialize(64, 4, 2);
  const auto chain = dmoa::simulate(f.runtime, "#algebra relay", params, f.config, dmoa::Topology::Chain);
  for (int s = 0; s < 4; ++s) EXPECT_EQ(chain.steps[s].selected_ids, (std::vector<int>{s}));
  EXPECT_TRUE(dmoa::verify_topology(chain, dmoa::Topology::Chain, 4, f.embedder).empty());
  EXPECT_TRUE(chain.final_answer);

  const auto star = dmoa::simulate(f.runtime, "#algebra relay", params, f.config, dmoa::Topology::Star);
  EXPECT_EQ(star.steps[1].selected_ids, (std::vector<int>{1, 2, 3}));
  EXPECT_TRUE(dmoa::verify_topology(star, dmoa::Topology::Star, 4, f.embedder).empty());

  f.config.max_steps = 3;
  const auto complete = dmoa::simulate(f.runtime, "#algebra relay", params, f.config, dmoa::Topology::Complete);
  const auto moa = dmoa::simulate(f.runtime, "#algebra relay", params, f.config, dmoa::Topology::Moa);
  for (const auto& s : complete.steps) EXPECT_EQ(s.k, 4);
  EXPECT_EQ(complete, moa);
  EXPECT_TRUE(dmoa::verify_topology(moa, dmoa::Topology::Moa, 4, f.embedder).empty());
}

TEST(Simulate, VerifierCatchesTampering) {
  Fixture f(4, 2);
  f.config.max_steps = 3;
  const auto params = dmoa::RouterParams::initialize(64, 4, 2);
  auto t = dmoa::simulate(f.runtime, "#algebra relay", params, f.config, dmoa::Topology::Chain);
  auto wrong_set = t;
  wrong_set.steps[1].selected_ids = {2};
  EXPECT_FALSE(dmoa::verify_topology(wrong_set, dmoa::Topology::Chain, 4, f.embedder).empty());
  auto wrong_context = t;
  wrong_context.steps[2].context_X[0] += 1e-9;
  EXPECT_FALSE(dmoa::verify_topology(wrong_context, dmoa::Topology::Chain, 4, f.embedder).empty());
  auto extra_response = t;
  extra_response.responses[{1, 3}] = extra_response.responses.begin()->second;
  EXPECT_FALSE(dmoa::verify_topology(extra_response, dmoa::Topology::Chain, 4, f.embedder).empty());
  EXPECT_FALSE(dmoa::verify_topology(t, dmoa::Topology::Star, 4, f.embedder).empty());
}

TEST(Synthetic, PoolAndQueries) {
  const auto fam = syn::routing_family();
  const auto pool = syn::make_pool(8, {fam});
  EXPECT_EQ(pool.profiles[2].skill_map.at("algebra").target_entropy, 0.2);
  EXPECT_EQ(pool.profiles[3].skill_map.at("algebra").target_entropy, 2.0);
  EXPECT_EQ(pool.profiles[3].skill_map.at("default").target_entropy, 2.0);
  const auto q = syn::make_queries(fam, 8, 1);
  EXPECT_EQ(dmoa::task_tag_of(q[0]), "algebra");
  EXPECT_EQ(dmoa::task_tag_of(q[5]), "geometry");
  EXPECT_EQ(q, syn::make_queries(fam, 8, 1));
  EXPECT_NE(q, syn::make_queries(fam, 8, 2));
}

TEST(Synthetic, Top2Recovery) {
  const auto fam = syn::routing_family();
  const std::vector<std::string> q = {"#algebra a", "#coding b"};
  std::vector<double> hit(8, 0.0), miss(8, 0.0);
  hit[2] = hit[5] = 1.0;
  miss[2] = miss[3] = 1.0;
  EXPECT_DOUBLE_EQ(syn::top2_recovery_rate({{hit, hit}, {miss}}, q, fam), 2.0 / 3.0);
}

}  // namespace
