// SPDX-License-Identifier: Apache-2.0
#pragma once

// Agent runtime: prompt assembly, deterministic mock agents with a
// controllable predictive entropy, an OpenAI-compatible chat client that
// derives entropy from top-j log-probabilities, tools, and the summarizer.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dmoa/core.hpp"

namespace dmoa {

// --- tools -----------------------------------------------------------------

struct ToolSpec {
  std::string name;
  std::string description;
  std::function<std::string(const std::string&)> invoke;
};

/// Evaluates infix arithmetic over + - * / (also the Unicode minus, times
/// and division signs), parentheses and decimal literals. Throws Error on
/// parse errors and division by zero.
double evaluate_expression(std::string_view expression);

/// Shortest decimal rendering that round-trips ("14", "0.75").
std::string render_number(double value);

/// evaluate_expression + render_number.
std::string calculator_tool(std::string_view expression);

/// Registered tools: "calculator" is live; "python" and "search" are named
/// stubs that answer with a fixed unavailability notice.
const std::map<std::string, ToolSpec>& tool_registry();

inline constexpr std::string_view kToolUnavailable = "tool unavailable in this deployment";

// --- prompts ---------------------------------------------------------------

/// Instruction that precedes the previous step's responses.
extern const std::string_view kSynthesisInstruction;

/// system_part: profile, available tools, then the user query verbatim.
/// context_part: empty at step 1; otherwise the synthesis instruction and
/// the previous responses numbered 1..k in selection order.
Prompt assemble_prompt(const AgentSpec& agent, std::string_view user_query,
                       std::span<const AgentResponse> prev_responses);

/// The task tag of a query is its first "#word" token, or "default".
std::string task_tag_of(std::string_view query);

// --- mock agents -------------------------------------------------------------

struct SkillEntry {
  double target_entropy = 0.0;
  double jitter = 0.0;
};

struct MockProfile {
  int agent_id = 0;
  std::map<std::string, SkillEntry> skill_map;  // "default" is the fallback tag
  /// Placeholders: {role} {agent} {tag} {step} {query}.
  std::string response_template = "{role} (agent {agent}) on {tag}, step {step}: {query}";
  int vocab_size = 16;
  int tokens_per_response = 16;
  /// Test hook: steps at which this mock reports a transport failure.
  std::vector<int> fail_steps;
};

/// Throws ConfigError if a target exceeds ln V, a jitter is negative, or
/// the vocabulary/token counts are out of range.
void validate_profile(const MockProfile& profile);

/// Entropy of p = (1 - eps) delta + eps uniform(V), in nats.
double mixture_entropy(double eps, int vocab_size);

/// Bisection on eps in [0, 1] to width 1e-9 for mixture_entropy(eps) = target.
double solve_mixture_epsilon(double target, int vocab_size);

/// Per-token seeds are drawn from `seed`; per-token targets are the tag's
/// mean plus jitter * U(-1, 1), clamped to [0, ln V].
AgentResponse mock_execute(const MockProfile& profile, const AgentSpec& agent, const Prompt& prompt,
                           std::string_view user_query, std::string_view task_tag, std::uint64_t seed,
                           int step_index);

// --- chat client -------------------------------------------------------------

struct ChatOptions {
  std::string endpoint;  // full chat-completions URL
  std::string api_key;   // bearer token, usually from DMOA_API_KEY
  int top_logprobs = 5;
  int max_tokens = 512;
  int timeout_seconds = 120;
};

/// Entropy of the distribution obtained by renormalizing exp(logprobs).
/// Underestimates the full-vocabulary entropy.
double renormalized_entropy(std::span<const double> logprobs);

/// Request body for one agent call.
std::string chat_request_body(const AgentSpec& agent, const Prompt& prompt, const ChatOptions& options);

/// Parses a chat-completions reply. Missing log-probabilities leave
/// predictive_entropy empty.
AgentResponse parse_chat_completion(const std::string& body, int agent_id, int step_index);

AgentResponse chat_execute(const AgentSpec& agent, const Prompt& prompt, const ChatOptions& options,
                           int step_index);

// --- backends ----------------------------------------------------------------

class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual AgentResponse execute(const AgentSpec& agent, const Prompt& prompt, std::string_view user_query,
                                std::string_view task_tag, std::uint64_t seed, int step_index) const = 0;
};

class MockBackend final : public AgentBackend {
 public:
  explicit MockBackend(std::vector<MockProfile> profiles);
  AgentResponse execute(const AgentSpec& agent, const Prompt& prompt, std::string_view user_query,
                        std::string_view task_tag, std::uint64_t seed, int step_index) const override;
  const std::vector<MockProfile>& profiles() const noexcept { return profiles_; }

 private:
  std::vector<MockProfile> profiles_;
};

class ChatBackend final : public AgentBackend {
 public:
  explicit ChatBackend(ChatOptions options) : options_(std::move(options)) {}
  AgentResponse execute(const AgentSpec& agent, const Prompt& prompt, std::string_view user_query,
                        std::string_view task_tag, std::uint64_t seed, int step_index) const override;

 private:
  ChatOptions options_;
};

// --- summarizer --------------------------------------------------------------

struct SummaryDecision {
  bool is_final = false;
  std::string answer;  // text after [FINAL]
  std::string reply;   // raw reply
};

/// "[FINAL] x" -> final with answer x; "[CONTINUE]" or anything else ->
/// continue. Leading whitespace is ignored.
SummaryDecision parse_summary_reply(std::string_view reply);

/// User message sent to the summarizer. `force` asks for a final answer.
std::string summarizer_message(std::string_view query, std::span<const AgentResponse> responses, bool force);

extern const std::string_view kSummarizerSystemPrompt;

class Summarizer {
 public:
  virtual ~Summarizer() = default;
  /// Returns the raw reply for the given step.
  virtual std::string reply(std::string_view query, std::span<const AgentResponse> responses, int step,
                            bool force) const = 0;

  SummaryDecision decide(std::string_view query, std::span<const AgentResponse> responses, int step,
                         bool force = false) const;
};

/// Continues until `final_at_step` (0 = never), then answers with the
/// lowest-entropy response text.
class MockSummarizer final : public Summarizer {
 public:
  explicit MockSummarizer(int final_at_step) : final_at_step_(final_at_step) {}
  std::string reply(std::string_view query, std::span<const AgentResponse> responses, int step,
                    bool force) const override;

 private:
  int final_at_step_;
};

class ChatSummarizer final : public Summarizer {
 public:
  ChatSummarizer(ChatOptions options, std::string model) : options_(std::move(options)), model_(std::move(model)) {}
  std::string reply(std::string_view query, std::span<const AgentResponse> responses, int step,
                    bool force) const override;

 private:
  ChatOptions options_;
  std::string model_;
};

}  // namespace dmoa
