// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "dmoa/core.hpp"
#include "dmoa/error.hpp"

namespace {

dmoa::RouterConfig small_config() {
  dmoa::RouterConfig c;
  c.pool_size = 4;
  c.max_route = 2;
  c.embed_dim = 3;
  return c;
}

dmoa::StepRecord step(int index, std::vector<int> ids, std::vector<double> alpha) {
  dmoa::StepRecord s;
  s.step_index = index;
  s.k = static_cast<int>(ids.size());
  s.selected_ids = std::move(ids);
  s.alpha = std::move(alpha);
  s.logits_z.assign(4, 0.0);
  return s;
}

TEST(Core, ValidateConfigAcceptsDefaults) {
  const auto c = small_config();
  EXPECT_EQ(dmoa::validate_config(c), c);
}

TEST(Core, ValidateConfigRejectsBadValues) {
  auto c = small_config();
  c.temperature = 0.0;
  try {
    dmoa::validate_config(c);
    FAIL();
  } catch (const dmoa::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("temperature must be positive"), std::string::npos);
  }
  c = small_config();
  c.max_route = 5;  // K above N is legal; k is capped by N
  EXPECT_NO_THROW(dmoa::validate_config(c));
  c.max_route = 0;
  EXPECT_THROW(dmoa::validate_config(c), dmoa::ConfigError);
  c = small_config();
  c.pool_size = 0;
  EXPECT_THROW(dmoa::validate_config(c), dmoa::ConfigError);
  c = small_config();
  c.max_steps = 0;
  EXPECT_THROW(dmoa::validate_config(c), dmoa::ConfigError);
}

TEST(Core, EmptyQueryIsRejected) { EXPECT_THROW(dmoa::new_trajectory(""), dmoa::Error); }

TEST(Core, AppendStepChecksInvariantsAndCounts) {
  auto t = dmoa::new_trajectory("q");
  const auto c = small_config();
  dmoa::append_step(t, step(1, {2, 0}, {0.25, 0.75}), c, 2);
  dmoa::append_step(t, step(2, {1}, {1.0}), c, 4);
  EXPECT_EQ(t.steps.size(), 2U);
  EXPECT_EQ(t.total_agent_calls, 6U);

  EXPECT_THROW(dmoa::append_step(t, step(4, {1}, {1.0}), c, 1), dmoa::Error);          // gap
  EXPECT_THROW(dmoa::append_step(t, step(3, {1, 1}, {0.5, 0.5}), c, 2), dmoa::Error);  // duplicate
  EXPECT_THROW(dmoa::append_step(t, step(3, {0, 1, 2}, {0.2, 0.3, 0.5}), c, 3), dmoa::Error);  // k > K
  EXPECT_THROW(dmoa::append_step(t, step(3, {0, 1}, {0.5, 0.4}), c, 2), dmoa::Error);  // alpha sum
  EXPECT_EQ(t.steps.size(), 2U);
}

TEST(Core, ResponsesAccumulateTokens) {
  auto t = dmoa::new_trajectory("q");
  dmoa::AgentResponse r;
  r.agent_id = 1;
  r.token_count = 12;
  dmoa::add_response(t, r);
  r.agent_id = 2;
  r.token_count = 5;
  dmoa::add_response(t, r);
  EXPECT_EQ(t.total_tokens, 17U);
  EXPECT_EQ(t.responses.size(), 2U);
}

TEST(Core, TerminationNamesRoundTrip) {
  for (auto k : {dmoa::Termination::Summarizer, dmoa::Termination::StepLimit})
    EXPECT_EQ(dmoa::termination_from_string(dmoa::to_string(k)), k);
  EXPECT_THROW(dmoa::termination_from_string("timeout"), dmoa::Error);
}

}  // namespace
