// SPDX-License-Identifier: Apache-2.0
#include "dmoa/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dmoa/error.hpp"
#include "dmoa/http.hpp"

namespace dmoa {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Reader {
 public:
  Reader(std::string origin, std::filesystem::path base) : origin_(std::move(origin)), base_(std::move(base)) {}

  [[noreturn]] void fail(int line, const std::string& what) const {
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + what);
  }

  std::uint64_t u64(const std::string& v, int line, const std::string& key) const {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) fail(line, "'" + key + "' expects a non-negative integer, got '" + v + "'");
    return out;
  }

  int i32(const std::string& v, int line, const std::string& key) const {
    int out = 0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) fail(line, "'" + key + "' expects an integer, got '" + v + "'");
    return out;
  }

  double real(const std::string& v, int line, const std::string& key) const {
    try {
      std::size_t used = 0;
      const double out = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      fail(line, "'" + key + "' expects a number, got '" + v + "'");
    }
  }

  std::string path(const std::string& v) const {
    if (v.empty()) return v;
    std::filesystem::path p(v);
    if (p.is_relative() && !base_.empty()) p = base_ / p;
    return p.lexically_normal().string();
  }

 private:
  std::string origin_;
  std::filesystem::path base_;
};

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin, const std::filesystem::path& base_dir) {
  Reader rd(origin, base_dir);
  RunConfig cfg;
  std::map<int, AgentSpec> agents;
  std::map<int, MockProfile> profiles;
  std::set<std::string> seen_keys;

  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') rd.fail(line, "unterminated section header");
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      static const std::set<std::string> known = {"router", "embedder", "backend", "summarizer", "training", "paths"};
      if (!known.count(section) && section.rfind("agent.", 0) != 0) rd.fail(line, "unknown section [" + section + "]");
      if (section.rfind("agent.", 0) == 0) {
        const int id = rd.i32(section.substr(6), line, "agent id");
        if (id < 0) rd.fail(line, "agent id must be non-negative");
        if (agents.count(id)) rd.fail(line, "duplicate section [" + section + "]");
        agents[id].agent_id = id;
        agents[id].model_ref = "mock";
        profiles[id].agent_id = id;
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) rd.fail(line, "expected 'key = value'");
    const std::string key = trim(std::string_view(s).substr(0, eq));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    if (section.empty()) rd.fail(line, "key '" + key + "' appears before any section");
    if (!seen_keys.insert(section + "." + key).second) rd.fail(line, "duplicate key '" + key + "' in [" + section + "]");
    auto unknown = [&] { rd.fail(line, "unknown key '" + key + "' in [" + section + "]"); };

    if (section == "router") {
      auto& r = cfg.router;
      if (key == "pool_size") r.pool_size = rd.u64(value, line, key);
      else if (key == "max_route") r.max_route = rd.u64(value, line, key);
      else if (key == "temperature") r.temperature = rd.real(value, line, key);
      else if (key == "embed_dim") r.embed_dim = rd.u64(value, line, key);
      else if (key == "max_steps") r.max_steps = rd.u64(value, line, key);
      else if (key == "train_steps") r.train_steps = rd.u64(value, line, key);
      else if (key == "seed") r.seed = rd.u64(value, line, key);
      else unknown();
    } else if (section == "embedder") {
      if (key == "kind") cfg.embedder.kind = value;
      else if (key == "endpoint") cfg.embedder.endpoint = value;
      else if (key == "max_chars") cfg.embedder.max_chars = rd.u64(value, line, key);
      else unknown();
    } else if (section == "backend") {
      auto& c = cfg.backend.chat;
      if (key == "kind") cfg.backend.kind = value;
      else if (key == "endpoint") c.endpoint = value;
      else if (key == "top_logprobs") c.top_logprobs = rd.i32(value, line, key);
      else if (key == "max_tokens") c.max_tokens = rd.i32(value, line, key);
      else if (key == "timeout") c.timeout_seconds = rd.i32(value, line, key);
      else unknown();
    } else if (section == "summarizer") {
      if (key == "kind") cfg.summarizer.kind = value;
      else if (key == "final_at_step") cfg.summarizer.final_at_step = rd.i32(value, line, key);
      else if (key == "endpoint") cfg.summarizer.endpoint = value;
      else if (key == "model") cfg.summarizer.model = value;
      else unknown();
    } else if (section == "training") {
      auto& t = cfg.training;
      if (key == "lr") t.hyper.lr = rd.real(value, line, key);
      else if (key == "batch_size") t.batch_size = rd.u64(value, line, key);
      else if (key == "epochs") t.epochs = rd.u64(value, line, key);
      else if (key == "loss") {
        try {
          t.loss = loss_kind_from_string(value);
        } catch (const ConfigError& e) {
          rd.fail(line, e.what());
        }
      } else if (key == "beta1") t.hyper.beta1 = rd.real(value, line, key);
      else if (key == "beta2") t.hyper.beta2 = rd.real(value, line, key);
      else if (key == "epsilon") t.hyper.epsilon = rd.real(value, line, key);
      else if (key == "weight_decay") t.hyper.weight_decay = rd.real(value, line, key);
      else if (key == "clip_norm") t.hyper.clip_norm = rd.real(value, line, key);
      else unknown();
    } else if (section == "paths") {
      auto& p = cfg.paths;
      if (key == "params_in") p.params_in = rd.path(value);
      else if (key == "params_out") p.params_out = rd.path(value);
      else if (key == "trace_out") p.trace_out = rd.path(value);
      else if (key == "metrics_out") p.metrics_out = rd.path(value);
      else if (key == "train_queries") p.train_queries = rd.path(value);
      else unknown();
    } else {
      const int id = rd.i32(section.substr(6), line, "agent id");
      AgentSpec& a = agents[id];
      MockProfile& m = profiles[id];
      if (key == "role") a.role = value;
      else if (key == "profile") a.profile_text = value;
      else if (key == "model") a.model_ref = value;
      else if (key == "tools") a.tool_names = split(value, ',');
      else if (key == "vocab") m.vocab_size = rd.i32(value, line, key);
      else if (key == "tokens") m.tokens_per_response = rd.i32(value, line, key);
      else if (key == "template") m.response_template = value;
      else if (key == "fail_steps") {
        for (const auto& s2 : split(value, ',')) m.fail_steps.push_back(rd.i32(s2, line, key));
      } else if (key.rfind("skill.", 0) == 0 && key.size() > 6) {
        const auto parts = split(value, ',');
        if (parts.empty() || parts.size() > 2) rd.fail(line, "'" + key + "' expects '<entropy>[, <jitter>]'");
        SkillEntry e;
        e.target_entropy = rd.real(parts[0], line, key);
        if (parts.size() == 2) e.jitter = rd.real(parts[1], line, key);
        m.skill_map[key.substr(6)] = e;
      } else {
        unknown();
      }
    }
  }

  try {
    cfg.router = validate_config(cfg.router);
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (agents.size() != cfg.router.pool_size)
    throw ConfigError(origin + ": pool has " + std::to_string(agents.size()) + " agent entries but pool_size=" +
                      std::to_string(cfg.router.pool_size));
  int expect = 0;
  for (auto& [id, spec] : agents) {
    if (id != expect) throw ConfigError(origin + ": missing pool entry [agent." + std::to_string(expect) + "]");
    ++expect;
    if (spec.profile_text.empty())
      throw ConfigError(origin + ": [agent." + std::to_string(id) + "] needs a non-empty profile");
    cfg.agents.push_back(spec);
    cfg.profiles.push_back(profiles[id]);
  }
  for (const auto& p : cfg.profiles) {
    try {
      validate_profile(p);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ": " + e.what());
    }
  }
  if (cfg.embedder.kind != "hash" && cfg.embedder.kind != "remote")
    throw ConfigError(origin + ": embedder kind must be 'hash' or 'remote'");
  if (cfg.backend.kind != "mock" && cfg.backend.kind != "chat")
    throw ConfigError(origin + ": backend kind must be 'mock' or 'chat'");
  if (cfg.summarizer.kind != "mock" && cfg.summarizer.kind != "chat")
    throw ConfigError(origin + ": summarizer kind must be 'mock' or 'chat'");
  if (cfg.embedder.kind == "remote" && cfg.embedder.endpoint.empty())
    throw ConfigError(origin + ": remote embedder needs an endpoint");
  if (cfg.backend.kind == "chat" && cfg.backend.chat.endpoint.empty())
    throw ConfigError(origin + ": chat backend needs an endpoint");
  if (cfg.summarizer.kind == "chat" && cfg.summarizer.endpoint.empty())
    throw ConfigError(origin + ": chat summarizer needs an endpoint");
  if (cfg.training.batch_size < 1) throw ConfigError(origin + ": batch_size must be at least 1");
  if (!(cfg.training.hyper.lr > 0.0)) throw ConfigError(origin + ": lr must be positive");
  if (!(cfg.training.hyper.clip_norm > 0.0)) throw ConfigError(origin + ": clip_norm must be positive");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), path.parent_path());
}

std::unique_ptr<RuntimeBundle> make_runtime(const RunConfig& config) {
  auto b = std::make_unique<RuntimeBundle>();
  const std::string key = http::api_key_from_env();
  if (config.embedder.kind == "remote")
    b->embedder = std::make_unique<RemoteEmbedder>(config.embedder.endpoint, config.router.embed_dim, key,
                                                   config.embedder.max_chars);
  else
    b->embedder = std::make_unique<HashEmbedder>(config.router.embed_dim, config.embedder.max_chars);

  if (config.backend.kind == "chat") {
    ChatOptions opt = config.backend.chat;
    opt.api_key = key;
    b->backend = std::make_unique<ChatBackend>(opt);
  } else {
    b->backend = std::make_unique<MockBackend>(config.profiles);
  }

  if (config.summarizer.kind == "chat") {
    ChatOptions opt = config.backend.chat;
    opt.endpoint = config.summarizer.endpoint;
    opt.api_key = key;
    b->summarizer = std::make_unique<ChatSummarizer>(opt, config.summarizer.model);
  } else {
    b->summarizer = std::make_unique<MockSummarizer>(config.summarizer.final_at_step);
  }
  b->runtime.agents = config.agents;
  b->runtime.embedder = b->embedder.get();
  b->runtime.backend = b->backend.get();
  b->runtime.summarizer = b->summarizer.get();
  return b;
}

}  // namespace dmoa
