// Copyright 2026 The fimedit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fimedit/fim_format.hpp"
#include "fimedit/tokenization.hpp"

namespace fimedit {

inline constexpr std::size_t kDefaultSuggestions = 3;
inline constexpr std::chrono::milliseconds kDefaultBackendTimeout{10000};

struct GenerationRequest {
  FimMode mode = FimMode::kMiddle;
  TokenSeq prefix;  // includes the human start, when there is one, as its tail
  std::size_t human_start_len = 0;
  TokenSeq suffix;
  TokenSeq document;
  std::size_t num_suggestions = kDefaultSuggestions;
  std::size_t max_new_tokens = 64;

  TokenSpan human_start() const {
    return TokenSpan(prefix).last(std::min(human_start_len, prefix.size()));
  }
  void validate() const;
};

struct Suggestion {
  TokenSeq tokens;
  double score = 0.0;
  bool terminated = true;  // generation reached [EOS]

  bool operator==(const Suggestion&) const = default;
};

enum class BackendErrorKind { kTransport, kTimeout, kStatus, kMalformed };

std::string_view to_string(BackendErrorKind kind);

class BackendError : public std::runtime_error {
 public:
  BackendError(BackendErrorKind kind, const std::string& what, int status = 0)
      : std::runtime_error(what), kind_(kind), status_(status) {}
  BackendErrorKind kind() const { return kind_; }
  int status() const { return status_; }

 private:
  BackendErrorKind kind_;
  int status_;
};

/// Uniform infilling contract. Implementations override `propose`, which
/// returns continuations of `request.prefix`; `generate` then prepends the
/// human start, orders by descending score, drops duplicates and truncates
/// to `num_suggestions`.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;

  std::vector<Suggestion> generate(const GenerationRequest& request) const;
  virtual std::string name() const = 0;

  /// Suggestions discarded as duplicates since construction.
  std::size_t duplicates_dropped() const { return duplicates_dropped_.load(); }

 protected:
  virtual std::vector<Suggestion> propose(const GenerationRequest& request) const = 0;

 private:
  mutable std::atomic<std::size_t> duplicates_dropped_{0};
};

/// Orders, dedups and truncates raw continuations; exposed for backends that
/// sit outside the class hierarchy. Returns the number of duplicates removed
/// through `dropped` when non-null.
std::vector<Suggestion> finalize_suggestions(const GenerationRequest& request,
                                             std::vector<Suggestion> raw,
                                             std::size_t* dropped = nullptr);

/// Replays fixed replies, or asks a callback. Used by tests and the echo
/// evaluation oracle.
class ScriptedBackend final : public GenerationBackend {
 public:
  using Responder = std::function<std::vector<Suggestion>(const GenerationRequest&)>;

  explicit ScriptedBackend(std::vector<TokenSeq> replies);
  explicit ScriptedBackend(Responder responder);
  static std::unique_ptr<ScriptedBackend> from_texts(const std::vector<std::string>& replies, Vocabulary& vocab);

  std::string name() const override { return "scripted"; }

 protected:
  std::vector<Suggestion> propose(const GenerationRequest& request) const override;

 private:
  Responder responder_;
};

/// Extractive stand-in: ranks document sentences by frequency-weighted
/// salience minus their unigram overlap with the surrounding summary.
class HeuristicBackend final : public GenerationBackend {
 public:
  explicit HeuristicBackend(Vocabulary& vocab);

  std::string name() const override { return "heuristic"; }

  struct Candidate {
    TokenSeq sentence;
    double salience = 0.0;    // normalized to [0, 1] by the best candidate
    double redundancy = 0.0;  // share of distinct words already in the context
    double score = 0.0;       // (salience - redundancy + 1) / 2
  };
  /// Every distinct sentence of the document with its score components, in
  /// document order.
  std::vector<Candidate> score_candidates(const GenerationRequest& request) const;

  bool is_delimiter(TokenId id) const;

 protected:
  std::vector<Suggestion> propose(const GenerationRequest& request) const override;

 private:
  std::vector<TokenId> delimiters_;
};

/// Baseline that emits uniformly random vocabulary tokens.
class RandomTokenBackend final : public GenerationBackend {
 public:
  RandomTokenBackend(const Vocabulary& vocab, std::uint64_t seed, std::size_t length = 12);

  std::string name() const override { return "random"; }

 protected:
  std::vector<Suggestion> propose(const GenerationRequest& request) const override;

 private:
  const Vocabulary& vocab_;
  std::uint64_t seed_;
  std::size_t length_;
};

/// Client for the POST {endpoint}/v1/infill protocol. The server returns
/// continuations of the prefix it was sent.
class RemoteBackend final : public GenerationBackend {
 public:
  RemoteBackend(std::string endpoint, Vocabulary& vocab,
                std::chrono::milliseconds timeout = kDefaultBackendTimeout);

  std::string name() const override { return "remote:" + endpoint_; }

 protected:
  std::vector<Suggestion> propose(const GenerationRequest& request) const override;

 private:
  std::string endpoint_;
  Vocabulary& vocab_;
  std::chrono::milliseconds timeout_;
};

/// Wire encoding of the infill protocol.
nlohmann::ordered_json request_to_wire(const GenerationRequest& request, const Vocabulary& vocab);
GenerationRequest request_from_wire(const nlohmann::json& body, Vocabulary& vocab);
nlohmann::ordered_json suggestions_to_wire(const std::vector<Suggestion>& suggestions,
                                           const Vocabulary& vocab);
/// Throws BackendError{kMalformed} on any schema violation.
std::vector<Suggestion> suggestions_from_wire(const nlohmann::json& body, Vocabulary& vocab);

struct HttpEndpoint {
  std::string scheme_host_port;  // e.g. "http://127.0.0.1:8000"
  std::string base_path;         // no trailing slash, may be empty
};
HttpEndpoint parse_endpoint(std::string_view url);

struct BackendOptions {
  std::chrono::milliseconds timeout = kDefaultBackendTimeout;
  std::vector<std::string> scripted_replies;
  std::uint64_t seed = 0;
};

/// "heuristic", "scripted", "scripted:<replies.json>", "random[:<seed>]",
/// "remote:<url>".
std::unique_ptr<GenerationBackend> make_backend(std::string_view spec, Vocabulary& vocab,
                                                const BackendOptions& options = {});

}  // namespace fimedit
