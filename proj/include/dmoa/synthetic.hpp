// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic task families for desk-scale experiments: a mock pool in which
// designated agents are confident (low entropy) on particular task tags,
// and query generators whose vocabulary depends on the tag.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dmoa/agents.hpp"
#include "dmoa/core.hpp"

namespace dmoa::synthetic {

struct Family {
  std::vector<std::string> tags;
  std::map<std::string, std::vector<int>> designated;  // tag -> confident agents
};

struct PoolOptions {
  double low_entropy = 0.2;
  double high_entropy = 2.0;
  double jitter = 0.05;
  int vocab_size = 16;
  int tokens_per_response = 16;
};

struct Pool {
  std::vector<AgentSpec> agents;
  std::vector<MockProfile> profiles;
};

/// N mock agents. For every tag of every family, designated agents get
/// `low_entropy`, everyone else `high_entropy`; the "default" tag is high
/// for all.
Pool make_pool(std::size_t pool_size, const std::vector<Family>& families, const PoolOptions& options = {});

/// Four tags over N=8 with designated pairs {2,5}, {0,7}, {1,4}, {3,6}.
Family routing_family();

/// Two unseen tags with designated pairs {1,6} and {0,3}.
Family adaptation_family();

/// `count` queries cycling through the family's tags. Each query begins
/// with "#<tag>" and mixes tag-specific terms with shared filler words.
std::vector<std::string> make_queries(const Family& family, std::size_t count, std::uint64_t seed);

/// Fraction of routing decisions whose top-2 logits are exactly the
/// designated pair of the query's tag, over every step of every query.
double top2_recovery_rate(const std::vector<std::vector<std::vector<double>>>& step_logits,
                          const std::vector<std::string>& queries, const Family& family);

}  // namespace dmoa::synthetic
