// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration: a flat, sectioned key = value text file.
//
//   [router]      pool_size max_route temperature embed_dim max_steps train_steps seed
//   [embedder]    kind (hash|remote) endpoint max_chars
//   [backend]     kind (mock|chat) endpoint top_logprobs max_tokens timeout
//   [summarizer]  kind (mock|chat) final_at_step endpoint model
//   [training]    lr batch_size epochs loss beta1 beta2 epsilon weight_decay clip_norm
//   [paths]       params_in params_out trace_out metrics_out train_queries
//   [agent.<id>]  role profile model tools vocab tokens template fail_steps
//                 skill.<tag> = <target entropy>[, <jitter>]
//
// '#' and ';' start comments. Unknown sections or keys are errors.
// Relative paths resolve against the config file's directory.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "dmoa/agents.hpp"
#include "dmoa/core.hpp"
#include "dmoa/embed.hpp"
#include "dmoa/orchestrator.hpp"

namespace dmoa {

struct EmbedderConfig {
  std::string kind = "hash";
  std::string endpoint;
  std::size_t max_chars = 0;
};

struct BackendConfig {
  std::string kind = "mock";
  ChatOptions chat;
};

struct SummarizerConfig {
  std::string kind = "mock";
  int final_at_step = 0;  // mock: 0 = never finalize before the step limit
  std::string endpoint;
  std::string model;
};

struct PathsConfig {
  std::string params_in;
  std::string params_out;
  std::string trace_out;
  std::string metrics_out;
  std::string train_queries;
};

struct RunConfig {
  RouterConfig router;
  std::vector<AgentSpec> agents;
  std::vector<MockProfile> profiles;
  EmbedderConfig embedder;
  BackendConfig backend;
  SummarizerConfig summarizer;
  TrainOptions training;
  PathsConfig paths;
};

/// Parses config text; `origin` labels error messages and `base_dir`
/// anchors relative paths.
RunConfig parse_config(const std::string& text, const std::string& origin,
                       const std::filesystem::path& base_dir = {});

RunConfig load_config(const std::filesystem::path& path);

/// Owns the embedder, backend and summarizer a RunConfig describes.
struct RuntimeBundle {
  std::unique_ptr<Embedder> embedder;
  std::unique_ptr<AgentBackend> backend;
  std::unique_ptr<Summarizer> summarizer;
  Runtime runtime;
};

std::unique_ptr<RuntimeBundle> make_runtime(const RunConfig& config);

}  // namespace dmoa
