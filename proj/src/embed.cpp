// SPDX-License-Identifier: Apache-2.0
#include "dmoa/embed.hpp"

#include <cmath>

#include <json.hpp>

#include "dmoa/error.hpp"
#include "dmoa/http.hpp"
#include "dmoa/seed.hpp"

namespace dmoa {

namespace {

bool is_token_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

char lower(unsigned char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c); }

}  // namespace

EmbeddingVector hash_embed(std::string_view text, std::size_t d, std::size_t max_chars) {
  if (d < 1) throw ConfigError("embedding dimension must be at least 1");
  if (max_chars > 0 && text.size() > max_chars) text = text.substr(0, max_chars);
  EmbeddingVector out(d);
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    const std::uint64_t h = fnv1a64(token);
    const std::size_t bucket = h % d;
    out[bucket] += ((h / d) & 1U) == 0 ? 1.0 : -1.0;
    token.clear();
  };
  for (unsigned char c : text) {
    if (is_token_char(c))
      token.push_back(lower(c));
    else
      flush();
  }
  flush();
  double norm2 = 0.0;
  for (double v : out.values) norm2 += v * v;
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : out.values) v *= inv;
  }
  return out;
}

EmbeddingVector remote_embed(const std::string& text, const std::string& endpoint, std::size_t d,
                             const std::string& bearer_token) {
  const nlohmann::json request = {{"input", text}};
  const std::string body = http::post_json(endpoint, request.dump(), bearer_token);
  // Python-style encoders emit bare NaN/Infinity, which is not JSON. Map them
  // to null so they surface as non-finite entries instead of parse failures.
  std::string cleaned = body;
  for (const char* bad : {"-Infinity", "Infinity", "NaN"}) {
    const std::string needle = bad;
    for (auto pos = cleaned.find(needle); pos != std::string::npos; pos = cleaned.find(needle, pos))
      cleaned.replace(pos, needle.size(), "null");
  }
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(cleaned);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("embedding service returned malformed JSON: ") + e.what());
  }
  if (!reply.contains("embedding") || !reply["embedding"].is_array())
    throw TransportError("embedding service reply has no 'embedding' array");
  const auto& arr = reply["embedding"];
  if (arr.size() != d)
    throw ShapeError("embedding dimension mismatch: expected " + std::to_string(d) + ", received " +
                     std::to_string(arr.size()));
  EmbeddingVector out(d);
  for (std::size_t i = 0; i < d; ++i) {
    if (!arr[i].is_number())
      throw NumericError("embedding entry " + std::to_string(i) + " is not finite");
    out[i] = arr[i].get<double>();
    if (!std::isfinite(out[i]))
      throw NumericError("embedding entry " + std::to_string(i) + " is not finite");
  }
  return out;
}

EmbeddingVector RemoteEmbedder::embed(std::string_view text) const {
  if (max_chars_ > 0 && text.size() > max_chars_) text = text.substr(0, max_chars_);
  return remote_embed(std::string(text), endpoint_, d_, token_);
}

}  // namespace dmoa
