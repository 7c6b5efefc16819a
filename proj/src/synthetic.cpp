// SPDX-License-Identifier: Apache-2.0
#include "dmoa/synthetic.hpp"

#include <algorithm>
#include <set>

#include "dmoa/error.hpp"
#include "dmoa/router.hpp"
#include "dmoa/seed.hpp"

namespace dmoa::synthetic {

namespace {

const char* const kRoles[] = {"Math Solver",      "Mathematical Analyst", "Programming Expert", "Inspector",
                              "Algorithm Designer", "Test Analyst",       "Bug Fixer",          "Knowledgeable Expert",
                              "Critic",           "Historian",            "Doctor",             "Lawyer"};

const char* const kFiller[] = {"please", "explain", "the", "answer", "step", "carefully", "given", "problem",
                               "what", "result", "show", "work", "find", "value", "consider", "case"};

}  // namespace

Pool make_pool(std::size_t pool_size, const std::vector<Family>& families, const PoolOptions& options) {
  Pool pool;
  for (std::size_t a = 0; a < pool_size; ++a) {
    const int id = static_cast<int>(a);
    AgentSpec spec;
    spec.agent_id = id;
    spec.role = kRoles[a % std::size(kRoles)];
    spec.model_ref = "mock";
    spec.profile_text = "You are a specialized expert for solving the given task. Your role is: " + spec.role + ".";
    spec.tool_names = {"calculator"};
    MockProfile prof;
    prof.agent_id = id;
    prof.vocab_size = options.vocab_size;
    prof.tokens_per_response = options.tokens_per_response;
    prof.skill_map["default"] = {options.high_entropy, options.jitter};
    for (const auto& fam : families) {
      for (const auto& tag : fam.tags) {
        const auto it = fam.designated.find(tag);
        const bool confident = it != fam.designated.end() &&
                               std::find(it->second.begin(), it->second.end(), id) != it->second.end();
        prof.skill_map[tag] = {confident ? options.low_entropy : options.high_entropy, options.jitter};
      }
    }
    pool.agents.push_back(std::move(spec));
    pool.profiles.push_back(std::move(prof));
  }
  return pool;
}

Family routing_family() {
  Family f;
  f.tags = {"algebra", "geometry", "coding", "history"};
  f.designated = {{"algebra", {2, 5}}, {"geometry", {0, 7}}, {"coding", {1, 4}}, {"history", {3, 6}}};
  return f;
}

Family adaptation_family() {
  Family f;
  f.tags = {"biology", "law"};
  f.designated = {{"biology", {1, 6}}, {"law", {0, 3}}};
  return f;
}

std::vector<std::string> make_queries(const Family& family, std::size_t count, std::uint64_t seed) {
  if (family.tags.empty()) throw Error("family has no tags");
  Rng rng(derive_seed(seed, "synthetic-queries"));
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t q = 0; q < count; ++q) {
    const std::string& tag = family.tags[q % family.tags.size()];
    std::string text = "#" + tag + " question " + std::to_string(rng.next_u64() % 100000) + ":";
    for (int w = 0; w < 6; ++w) text += " " + tag + "term" + std::to_string(rng.next_u64() % 12);
    for (int w = 0; w < 4; ++w) text += std::string(" ") + kFiller[rng.next_u64() % std::size(kFiller)];
    out.push_back(std::move(text));
  }
  return out;
}

double top2_recovery_rate(const std::vector<std::vector<std::vector<double>>>& step_logits,
                          const std::vector<std::string>& queries, const Family& family) {
  if (step_logits.size() != queries.size()) throw Error("logits and queries differ in count");
  std::size_t hits = 0, total = 0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto it = family.designated.find(task_tag_of(queries[q]));
    if (it == family.designated.end()) throw Error("query has no designated agents: " + queries[q]);
    const std::set<int> want(it->second.begin(), it->second.end());
    for (const auto& z : step_logits[q]) {
      const auto top = keep_top_k(z, 2);
      ++total;
      if (std::set<int>(top.begin(), top.end()) == want) ++hits;
    }
  }
  return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

}  // namespace dmoa::synthetic
