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

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fimedit/backend.hpp"
#include "fimedit/datagen.hpp"
#include "fimedit/fim_format.hpp"

namespace fimedit {

// ---------------------------------------------------------------------------
// ROUGE-N
// ---------------------------------------------------------------------------

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int n = 1;
};

/// Clipped n-gram overlap. Token level, no stemming, no stopword removal. A
/// side with no n-grams yields 0 for the component that divides by it.
RougeScore rouge_n(TokenSpan candidate, TokenSpan reference, int n);

// ---------------------------------------------------------------------------
// Next-token scorers and fixed-horizon likelihood
// ---------------------------------------------------------------------------

class ScorerError : public std::runtime_error {
 public:
  ScorerError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position_(position) {}
  /// Index into the continuation at which scoring failed.
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class LMScorer {
 public:
  virtual ~LMScorer() = default;
  /// log p(next | context), natural log.
  virtual double logprob(TokenSpan context, TokenId next) const = 0;
  /// log p(continuation[h] | context ∘ continuation[0, h)) for every h. The
  /// default calls `logprob` per position and reports failures as
  /// ScorerError with that position.
  virtual std::vector<double> continuation_logprobs(TokenSpan context,
                                                    TokenSpan continuation) const;
  virtual std::string name() const = 0;
};

/// log p = -ln V for every token.
class UniformScorer final : public LMScorer {
 public:
  explicit UniformScorer(std::size_t vocabulary_size);
  double logprob(TokenSpan context, TokenId next) const override;
  std::string name() const override { return "uniform"; }

 private:
  double logprob_;
};

struct NgramConfig {
  std::size_t order = 3;
  double add_k = 0.1;
  // Interpolation weights, lowest order first. Must sum to 1.
  std::vector<double> weights = {0.1, 0.3, 0.6};
};

/// Interpolated add-k n-gram model:
///   p(w | h) = sum_n weights[n-1] * (c(h_n, w) + k) / (c(h_n) + k V)
/// where h_n is the last n-1 tokens of [BOS]-padded history and V counts the
/// training types plus one shared unknown-word class.
class NgramScorer final : public LMScorer {
 public:
  static NgramScorer train(std::span<const TokenSeq> sentences, NgramConfig config = {});

  double probability(TokenSpan context, TokenId next) const;
  double logprob(TokenSpan context, TokenId next) const override;
  std::string name() const override;

  /// Types seen in training plus the unknown class.
  std::size_t vocabulary_size() const { return known_.size() + 1; }
  const std::vector<TokenId>& known_tokens() const { return known_; }
  const NgramConfig& config() const { return config_; }

  static constexpr TokenId kUnknown = 0xFFFFFFFFu;

 private:
  explicit NgramScorer(NgramConfig config);
  TokenId map_token(TokenId id) const;

  NgramConfig config_;
  std::vector<TokenId> known_;  // sorted
  // Index n-1 holds order-n statistics.
  std::vector<std::map<TokenSeq, double>> ngram_counts_;
  std::vector<std::map<TokenSeq, double>> history_counts_;
};

/// Client for POST {endpoint}/v1/logprobs:
///   {"context": [..], "continuation": [..]} -> {"logprobs": [..]}
class RemoteScorer final : public LMScorer {
 public:
  RemoteScorer(std::string endpoint, const Vocabulary& vocab,
               std::chrono::milliseconds timeout = kDefaultBackendTimeout);
  double logprob(TokenSpan context, TokenId next) const override;
  std::vector<double> continuation_logprobs(TokenSpan context,
                                            TokenSpan continuation) const override;
  std::string name() const override { return "remote:" + endpoint_; }

 private:
  std::string endpoint_;
  const Vocabulary& vocab_;
  std::chrono::milliseconds timeout_;
};

struct CoherenceConfig {
  std::size_t horizon = 10;
};

/// Sum of the first min(H, |continuation|) next-token log-probabilities of
/// `continuation` given `context`.
double likelihood_lh(TokenSpan context, TokenSpan continuation, const LMScorer& scorer,
                     const CoherenceConfig& config);

struct CoherenceScores {
  std::optional<double> l1;  // prefix -> middle; absent for an empty middle
  std::optional<double> l2;  // prefix ∘ middle -> suffix; absent for an empty suffix
};

CoherenceScores coherence_l1_l2(const SplitSummary& split, const LMScorer& scorer,
                                const CoherenceConfig& config);

// ---------------------------------------------------------------------------
// Corpus evaluation
// ---------------------------------------------------------------------------

/// Middle/Begin/End use golden context; All generates the whole summary with
/// no context.
enum class EvalTask { kMiddle, kBegin, kEnd, kAll };

std::string_view to_string(EvalTask task);
EvalTask parse_eval_task(std::string_view text);

struct EvalItem {
  std::string id;
  TokenSeq document;
  // Middle: three-way split. Begin/End: two-way split, middle empty.
  // All: whole summary in `middle`.
  SplitSummary split;
};

inline constexpr std::size_t kDefaultMinTargetLen = 2;

struct EvalSet {
  std::vector<EvalItem> items;
  std::vector<std::string> skipped_ids;  // summaries too short for the target length
};

/// Seeded splits via `sample_split_for_mode`; run-to-run reproducible.
EvalSet make_eval_set(std::span<const DatasetRecord> corpus, Vocabulary& vocab, EvalTask task,
                      std::uint64_t seed, std::size_t min_target_len = kDefaultMinTargetLen);

GenerationRequest eval_request(const EvalItem& item, EvalTask task,
                               std::size_t max_new_tokens = 64);
TokenSeq eval_target(const EvalItem& item, EvalTask task);

struct FimEvalReport {
  EvalTask task = EvalTask::kMiddle;
  RougeScore rouge1;  // corpus means of P, R, F1
  RougeScore rouge2;
  std::size_t n_items = 0;
  std::size_t n_failed = 0;
  std::vector<std::string> failed_ids;

  nlohmann::ordered_json to_json() const;
};

/// Scores the top-1 suggestion per item. Failed items are excluded from the
/// means; an item with no suggestion scores zero.
FimEvalReport eval_fim(std::span<const EvalItem> items, const GenerationBackend& backend,
                       EvalTask task, std::size_t max_new_tokens = 64);

/// Returns the golden target for any request built by `eval_request`.
std::unique_ptr<GenerationBackend> make_echo_backend(std::span<const EvalItem> items,
                                                     EvalTask task);

struct CoherenceReport {
  std::optional<double> l1_mean;
  std::optional<double> l2_mean;
  std::size_t n_items = 0;
  std::size_t n_l1 = 0;
  std::size_t n_l2 = 0;
  std::size_t n_failed = 0;
  std::size_t horizon = 0;
  std::string middle_source;  // "golden" or "generated"

  nlohmann::ordered_json to_json() const;
};

/// With `generator` set, its top-1 middle replaces the golden middle.
CoherenceReport eval_coherence(std::span<const EvalItem> items, const LMScorer& scorer,
                               const CoherenceConfig& config,
                               const GenerationBackend* generator = nullptr);

}  // namespace fimedit
