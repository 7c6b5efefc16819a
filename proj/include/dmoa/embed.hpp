// SPDX-License-Identifier: Apache-2.0
#pragma once

// Text embedders. The router treats the encoder as a frozen black box, so
// any deterministic map into R^d works; the hash embedder is the offline
// default and the remote embedder talks to an external sentence encoder.

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

#include "dmoa/core.hpp"

namespace dmoa {

/// Signed feature hashing.
///
/// Text is ASCII-lowercased and split on runs of characters that are not
/// ASCII letters or digits. For each token t, h = fnv1a64(t); the token adds
/// +1 to bucket h % d when the quotient h / d is even and -1 otherwise. The
/// result is L2-normalized unless it is the zero vector. Token order is
/// ignored. `max_chars` > 0 truncates the text first.
EmbeddingVector hash_embed(std::string_view text, std::size_t d, std::size_t max_chars = 0);

/// POSTs {"input": text} to `endpoint` and expects {"embedding": [...]}
/// of length d with finite entries.
EmbeddingVector remote_embed(const std::string& text, const std::string& endpoint, std::size_t d,
                             const std::string& bearer_token = {});

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
  virtual std::size_t dim() const noexcept = 0;
};

class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(std::size_t d, std::size_t max_chars = 0) : d_(d), max_chars_(max_chars) {}
  EmbeddingVector embed(std::string_view text) const override {
    return hash_embed(text, d_, max_chars_);
  }
  std::size_t dim() const noexcept override { return d_; }

 private:
  std::size_t d_;
  std::size_t max_chars_;
};

class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(std::string endpoint, std::size_t d, std::string bearer_token, std::size_t max_chars = 0)
      : endpoint_(std::move(endpoint)), d_(d), token_(std::move(bearer_token)), max_chars_(max_chars) {}
  EmbeddingVector embed(std::string_view text) const override;
  std::size_t dim() const noexcept override { return d_; }

 private:
  std::string endpoint_;
  std::size_t d_;
  std::string token_;
  std::size_t max_chars_;
};

}  // namespace dmoa
