// SPDX-License-Identifier: Apache-2.0
#include "dmoa/agents.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

#include "dmoa/error.hpp"
#include "dmoa/http.hpp"
#include "dmoa/learning.hpp"
#include "dmoa/seed.hpp"

namespace dmoa {

using nlohmann::json;

// --- tools -----------------------------------------------------------------

const std::map<std::string, ToolSpec>& tool_registry() {
  static const std::map<std::string, ToolSpec> registry = [] {
    std::map<std::string, ToolSpec> r;
    r["calculator"] = {"Calculator", "evaluates an arithmetic expression and returns the number",
                       [](const std::string& in) { return calculator_tool(in); }};
    r["python"] = {"Python", "runs a Python script and returns its standard output",
                   [](const std::string&) { return std::string(kToolUnavailable); }};
    r["search"] = {"Search", "queries a web search engine and returns the top results",
                   [](const std::string&) { return std::string(kToolUnavailable); }};
    return r;
  }();
  return registry;
}

// --- prompts ---------------------------------------------------------------

const std::string_view kSynthesisInstruction =
    "You have been provided with a set of preliminary responses from various agents to the user query "
    "above. Your task is to synthesize these responses into a single, high-quality, and logically coherent "
    "final resolution. Ensure your output is well-structured and adheres to the highest standards of "
    "accuracy.";

Prompt assemble_prompt(const AgentSpec& agent, std::string_view user_query,
                       std::span<const AgentResponse> prev_responses) {
  Prompt p;
  p.system_part = "[Agent Profile]\n" + agent.profile_text + "\n";
  if (!agent.tool_names.empty()) {
    p.system_part += "\nAvailable Tools:\n";
    const auto& tools = tool_registry();
    for (const auto& name : agent.tool_names) {
      const auto it = tools.find(name);
      p.system_part += "- [" + (it != tools.end() ? it->second.name : name) + "] " +
                       (it != tools.end() ? it->second.description : std::string(kToolUnavailable)) + "\n";
    }
  }
  p.system_part += "\n[User Query]\n";
  p.system_part += user_query;
  p.system_part += "\n";

  if (!prev_responses.empty()) {
    p.context_part = "[Agent Context & Synthesis]\n";
    p.context_part += kSynthesisInstruction;
    p.context_part += "\n\nResponses from agents:\n";
    for (std::size_t i = 0; i < prev_responses.size(); ++i)
      p.context_part += std::to_string(i + 1) + ". " + prev_responses[i].text + "\n";
  }
  return p;
}

std::string task_tag_of(std::string_view query) {
  for (std::size_t i = 0; i < query.size(); ++i) {
    if (query[i] != '#' || (i > 0 && query[i - 1] != ' ' && query[i - 1] != '\t')) continue;
    std::size_t j = i + 1;
    while (j < query.size() && query[j] != ' ' && query[j] != '\t' && query[j] != '\n') ++j;
    if (j > i + 1) return std::string(query.substr(i + 1, j - i - 1));
  }
  return "default";
}

// --- mock agents -------------------------------------------------------------

void validate_profile(const MockProfile& profile) {
  const std::string who = "mock agent " + std::to_string(profile.agent_id);
  if (profile.vocab_size < 2) throw ConfigError(who + ": vocabulary size must be at least 2");
  if (profile.tokens_per_response < 1) throw ConfigError(who + ": tokens per response must be positive");
  const double cap = std::log(static_cast<double>(profile.vocab_size));
  for (const auto& [tag, skill] : profile.skill_map) {
    if (!(skill.target_entropy >= 0.0) || skill.target_entropy > cap + 1e-12)
      throw ConfigError(who + ": target entropy for '" + tag + "' must lie in [0, ln V]");
    if (!(skill.jitter >= 0.0)) throw ConfigError(who + ": jitter for '" + tag + "' must be non-negative");
  }
}

double mixture_entropy(double eps, int vocab_size) {
  const double v = static_cast<double>(vocab_size);
  const double top = 1.0 - eps + eps / v;
  const double rest = eps / v;
  double h = 0.0;
  if (top > 0.0) h -= top * std::log(top);
  if (rest > 0.0) h -= (v - 1.0) * rest * std::log(rest);
  return h;
}

double solve_mixture_epsilon(double target, int vocab_size) {
  const double cap = std::log(static_cast<double>(vocab_size));
  if (target <= 0.0) return 0.0;
  if (target >= cap) return 1.0;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    if (mixture_entropy(mid, vocab_size) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

std::string render_template(std::string text, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    const std::string needle = "{" + key + "}";
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + value.size()))
      text.replace(pos, needle.size(), value);
  }
  return text;
}

}  // namespace

AgentResponse mock_execute(const MockProfile& profile, const AgentSpec& agent, const Prompt& prompt,
                           std::string_view user_query, std::string_view task_tag, std::uint64_t seed,
                           int step_index) {
  (void)prompt;
  auto it = profile.skill_map.find(std::string(task_tag));
  if (it == profile.skill_map.end()) it = profile.skill_map.find("default");
  if (it == profile.skill_map.end())
    throw ConfigError("mock agent " + std::to_string(profile.agent_id) + " has no skill for tag '" +
                      std::string(task_tag) + "' and no default");
  if (std::find(profile.fail_steps.begin(), profile.fail_steps.end(), step_index) != profile.fail_steps.end())
    throw TransportError("mock agent " + std::to_string(profile.agent_id) + " failed at step " +
                         std::to_string(step_index));

  const SkillEntry skill = it->second;
  const int v = profile.vocab_size;
  const double cap = std::log(static_cast<double>(v));
  Rng rng(seed);

  AgentResponse r;
  r.agent_id = agent.agent_id;
  r.step_index = step_index;
  r.token_count = profile.tokens_per_response;
  r.token_entropies.reserve(static_cast<std::size_t>(r.token_count));
  std::vector<double> dist(static_cast<std::size_t>(v));
  double sum = 0.0;
  for (int t = 0; t < r.token_count; ++t) {
    const double noise = rng.uniform(-1.0, 1.0);
    const double target = std::clamp(skill.target_entropy + skill.jitter * noise, 0.0, cap);
    const double eps = solve_mixture_epsilon(target, v);
    const auto mode = static_cast<std::size_t>(rng.next_u64() % static_cast<std::uint64_t>(v));
    std::fill(dist.begin(), dist.end(), eps / v);
    dist[mode] = 1.0 - eps + eps / v;
    const double h = token_entropy(dist);
    r.token_entropies.push_back(h);
    sum += h;
  }
  r.predictive_entropy = sum / static_cast<double>(r.token_count);
  r.text = render_template(profile.response_template, {{"role", agent.role.empty() ? "agent" : agent.role},
                                                       {"agent", std::to_string(agent.agent_id)},
                                                       {"tag", std::string(task_tag)},
                                                       {"step", std::to_string(step_index)},
                                                       {"query", std::string(user_query)}});
  return r;
}

// --- chat client -------------------------------------------------------------

double renormalized_entropy(std::span<const double> logprobs) {
  if (logprobs.empty()) return 0.0;
  const double m = *std::max_element(logprobs.begin(), logprobs.end());
  std::vector<double> p(logprobs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logprobs[i] - m);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return token_entropy(p);
}

std::string chat_request_body(const AgentSpec& agent, const Prompt& prompt, const ChatOptions& options) {
  json body = {
      {"model", agent.model_ref},
      {"messages",
       json::array({{{"role", "system"}, {"content", prompt.system_part}},
                    {{"role", "user"},
                     {"content", prompt.context_part.empty() ? std::string("Provide your analysis of the user query.")
                                                             : prompt.context_part}}})},
      {"logprobs", true},
      {"top_logprobs", options.top_logprobs},
      {"max_tokens", options.max_tokens},
  };
  return body.dump();
}

AgentResponse parse_chat_completion(const std::string& body, int agent_id, int step_index) {
  json reply;
  try {
    reply = json::parse(body);
  } catch (const json::exception& e) {
    throw TransportError(std::string("chat service returned malformed JSON: ") + e.what());
  }
  AgentResponse r;
  r.agent_id = agent_id;
  r.step_index = step_index;
  try {
    const auto& choice = reply.at("choices").at(0);
    const auto& content = choice.at("message").at("content");
    r.text = content.is_string() ? content.get<std::string>() : std::string();
    const json* tokens = nullptr;
    if (choice.contains("logprobs") && choice["logprobs"].is_object() && choice["logprobs"].contains("content") &&
        choice["logprobs"]["content"].is_array())
      tokens = &choice["logprobs"]["content"];
    if (tokens && !tokens->empty()) {
      double sum = 0.0;
      for (const auto& tok : *tokens) {
        std::vector<double> lps;
        if (tok.contains("top_logprobs") && tok["top_logprobs"].is_array())
          for (const auto& alt : tok["top_logprobs"]) lps.push_back(alt.at("logprob").get<double>());
        if (lps.empty()) lps.push_back(tok.at("logprob").get<double>());
        const double h = renormalized_entropy(lps);
        r.token_entropies.push_back(h);
        sum += h;
      }
      r.token_count = static_cast<int>(r.token_entropies.size());
      r.predictive_entropy = sum / static_cast<double>(r.token_count);
    } else if (reply.contains("usage") && reply["usage"].contains("completion_tokens")) {
      r.token_count = reply["usage"]["completion_tokens"].get<int>();
    }
  } catch (const json::exception& e) {
    throw TransportError(std::string("chat reply has wrong shape: ") + e.what());
  }
  if (r.token_count < 1) r.token_count = 1;
  return r;
}

AgentResponse chat_execute(const AgentSpec& agent, const Prompt& prompt, const ChatOptions& options,
                           int step_index) {
  const auto body = http::post_json(options.endpoint, chat_request_body(agent, prompt, options), options.api_key,
                                    options.timeout_seconds);
  return parse_chat_completion(body, agent.agent_id, step_index);
}

MockBackend::MockBackend(std::vector<MockProfile> profiles) : profiles_(std::move(profiles)) {
  for (std::size_t i = 0; i < profiles_.size(); ++i) {
    if (profiles_[i].agent_id != static_cast<int>(i))
      throw ConfigError("mock profiles must be ordered by agent id (entry " + std::to_string(i) + " has id " +
                        std::to_string(profiles_[i].agent_id) + ")");
    validate_profile(profiles_[i]);
  }
}

AgentResponse MockBackend::execute(const AgentSpec& agent, const Prompt& prompt, std::string_view user_query,
                                   std::string_view task_tag, std::uint64_t seed, int step_index) const {
  const auto idx = static_cast<std::size_t>(agent.agent_id);
  if (idx >= profiles_.size()) throw ConfigError("no mock profile for agent " + std::to_string(agent.agent_id));
  return mock_execute(profiles_[idx], agent, prompt, user_query, task_tag, seed, step_index);
}

AgentResponse ChatBackend::execute(const AgentSpec& agent, const Prompt& prompt, std::string_view,
                                   std::string_view, std::uint64_t, int step_index) const {
  return chat_execute(agent, prompt, options_, step_index);
}

// --- summarizer --------------------------------------------------------------

const std::string_view kSummarizerSystemPrompt =
    "You are the final summarizer. Given the original user query and the candidate responses from multiple "
    "agents, your job is to synthesize them into a single final answer. If the current evidence is already "
    "sufficient to answer the question reliably, output the final answer directly. Otherwise, explicitly "
    "indicate that more reasoning is needed.";

SummaryDecision parse_summary_reply(std::string_view reply) {
  SummaryDecision d;
  d.reply = std::string(reply);
  std::size_t i = 0;
  while (i < reply.size() && std::isspace(static_cast<unsigned char>(reply[i]))) ++i;
  const auto rest = reply.substr(i);
  constexpr std::string_view kFinal = "[FINAL]";
  if (rest.substr(0, kFinal.size()) == kFinal) {
    auto answer = rest.substr(kFinal.size());
    while (!answer.empty() && std::isspace(static_cast<unsigned char>(answer.front()))) answer.remove_prefix(1);
    while (!answer.empty() && std::isspace(static_cast<unsigned char>(answer.back()))) answer.remove_suffix(1);
    d.is_final = true;
    d.answer = std::string(answer);
  }
  return d;
}

std::string summarizer_message(std::string_view query, std::span<const AgentResponse> responses, bool force) {
  std::string msg = "User query:\n";
  msg += query;
  msg += "\n\nCandidate responses:\n";
  for (std::size_t i = 0; i < responses.size(); ++i)
    msg += std::to_string(i + 1) + ". " + responses[i].text + "\n";
  if (force)
    msg += "\nThe reasoning budget is exhausted. Reply with [FINAL] followed by the final answer.";
  else
    msg += "\nReply with [FINAL] followed by the final answer, or [CONTINUE] if more reasoning is required.";
  return msg;
}

SummaryDecision Summarizer::decide(std::string_view query, std::span<const AgentResponse> responses, int step,
                                   bool force) const {
  if (responses.empty()) throw Error("summarizer needs at least one response");
  return parse_summary_reply(reply(query, responses, step, force));
}

std::string MockSummarizer::reply(std::string_view, std::span<const AgentResponse> responses, int step,
                                  bool force) const {
  if (!force && (final_at_step_ <= 0 || step < final_at_step_)) return "[CONTINUE]";
  const AgentResponse* best = &responses[0];
  for (const auto& r : responses)
    if (r.predictive_entropy && (!best->predictive_entropy || *r.predictive_entropy < *best->predictive_entropy))
      best = &r;
  return "[FINAL] " + best->text;
}

std::string ChatSummarizer::reply(std::string_view query, std::span<const AgentResponse> responses, int,
                                  bool force) const {
  const json body = {
      {"model", model_},
      {"messages", json::array({{{"role", "system"}, {"content", std::string(kSummarizerSystemPrompt)}},
                                {{"role", "user"}, {"content", summarizer_message(query, responses, force)}}})},
      {"max_tokens", options_.max_tokens},
  };
  const auto text = http::post_json(options_.endpoint, body.dump(), options_.api_key, options_.timeout_seconds);
  try {
    const auto reply = json::parse(text);
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    return content.is_string() ? content.get<std::string>() : std::string();
  } catch (const json::exception& e) {
    throw TransportError(std::string("summarizer reply has wrong shape: ") + e.what());
  }
}

}  // namespace dmoa
