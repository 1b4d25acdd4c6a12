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

#include "fimedit/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include <httplib.h>

namespace fimedit {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::map<TokenSeq, int> ngram_counts(TokenSpan seq, int n) {
  std::map<TokenSeq, int> counts;
  const auto len = static_cast<std::size_t>(n);
  if (seq.size() < len) return counts;
  for (std::size_t k = 0; k + len <= seq.size(); ++k) {
    ++counts[TokenSeq(seq.begin() + static_cast<std::ptrdiff_t>(k),
                      seq.begin() + static_cast<std::ptrdiff_t>(k + len))];
  }
  return counts;
}

TokenSeq concat(TokenSpan a, TokenSpan b) {
  TokenSeq out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Mean over a fixed order so reports are bit-reproducible.
struct Mean {
  double sum = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  std::optional<double> value() const {
    return n ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt;
  }
};

}  // namespace

RougeScore rouge_n(TokenSpan candidate, TokenSpan reference, int n) {
  if (n < 1) throw std::invalid_argument("rouge order must be >= 1");
  RougeScore score;
  score.n = n;
  auto cand = ngram_counts(candidate, n);
  auto ref = ngram_counts(reference, n);
  double cand_total = 0, ref_total = 0, overlap = 0;
  for (const auto& [g, c] : cand) cand_total += c;
  for (const auto& [g, c] : ref) {
    ref_total += c;
    if (auto it = cand.find(g); it != cand.end()) overlap += std::min(c, it->second);
  }
  score.precision = cand_total > 0 ? overlap / cand_total : 0.0;
  score.recall = ref_total > 0 ? overlap / ref_total : 0.0;
  const double pr = score.precision + score.recall;
  score.f1 = pr > 0 ? 2.0 * score.precision * score.recall / pr : 0.0;
  return score;
}

std::vector<double> LMScorer::continuation_logprobs(TokenSpan context,
                                                    TokenSpan continuation) const {
  std::vector<double> out;
  out.reserve(continuation.size());
  TokenSeq history(context.begin(), context.end());
  for (std::size_t h = 0; h < continuation.size(); ++h) {
    try {
      out.push_back(logprob(history, continuation[h]));
    } catch (const ScorerError&) {
      throw;
    } catch (const std::exception& e) {
      throw ScorerError("scorer failed at continuation position " + std::to_string(h) + ": " +
                            e.what(),
                        h);
    }
    history.push_back(continuation[h]);
  }
  return out;
}

UniformScorer::UniformScorer(std::size_t vocabulary_size) {
  if (vocabulary_size == 0) throw std::invalid_argument("vocabulary size must be positive");
  logprob_ = -std::log(static_cast<double>(vocabulary_size));
}

double UniformScorer::logprob(TokenSpan, TokenId) const { return logprob_; }

NgramScorer::NgramScorer(NgramConfig config) : config_(std::move(config)) {
  if (config_.order < 1) throw std::invalid_argument("n-gram order must be >= 1");
  if (config_.weights.size() != config_.order) {
    throw std::invalid_argument("need one interpolation weight per order");
  }
  const double total = std::accumulate(config_.weights.begin(), config_.weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9 ||
      std::any_of(config_.weights.begin(), config_.weights.end(),
                  [](double w) { return w < 0; })) {
    throw std::invalid_argument("interpolation weights must be non-negative and sum to 1");
  }
  if (!(config_.add_k > 0)) throw std::invalid_argument("add-k constant must be positive");
  ngram_counts_.resize(config_.order);
  history_counts_.resize(config_.order);
}

NgramScorer NgramScorer::train(std::span<const TokenSeq> sentences, NgramConfig config) {
  NgramScorer model(std::move(config));
  const std::size_t order = model.config_.order;
  for (const auto& sentence : sentences) {
    TokenSeq padded(order - 1, id_of(Sentinel::kBos));
    padded.insert(padded.end(), sentence.begin(), sentence.end());
    for (std::size_t t = order - 1; t < padded.size(); ++t) {
      for (std::size_t n = 1; n <= order; ++n) {
        TokenSeq history(padded.begin() + static_cast<std::ptrdiff_t>(t - (n - 1)),
                         padded.begin() + static_cast<std::ptrdiff_t>(t));
        model.history_counts_[n - 1][history] += 1;
        history.push_back(padded[t]);
        model.ngram_counts_[n - 1][history] += 1;
      }
    }
    model.known_.insert(model.known_.end(), sentence.begin(), sentence.end());
  }
  std::sort(model.known_.begin(), model.known_.end());
  model.known_.erase(std::unique(model.known_.begin(), model.known_.end()), model.known_.end());
  return model;
}

TokenId NgramScorer::map_token(TokenId id) const {
  if (id == id_of(Sentinel::kBos)) return id;
  return std::binary_search(known_.begin(), known_.end(), id) ? id : kUnknown;
}

double NgramScorer::probability(TokenSpan context, TokenId next) const {
  const std::size_t order = config_.order;
  TokenSeq history(order - 1, id_of(Sentinel::kBos));
  for (auto id : context) history.push_back(map_token(id));
  history.erase(history.begin(),
                history.end() - static_cast<std::ptrdiff_t>(order - 1));  // keep last order-1
  const TokenId word = map_token(next);
  const double v = static_cast<double>(vocabulary_size());
  const double k = config_.add_k;

  double p = 0.0;
  for (std::size_t n = 1; n <= order; ++n) {
    TokenSeq h(history.end() - static_cast<std::ptrdiff_t>(n - 1), history.end());
    double ch = 0;
    if (auto it = history_counts_[n - 1].find(h); it != history_counts_[n - 1].end()) {
      ch = it->second;
    }
    h.push_back(word);
    double c = 0;
    if (auto it = ngram_counts_[n - 1].find(h); it != ngram_counts_[n - 1].end()) c = it->second;
    p += config_.weights[n - 1] * (c + k) / (ch + k * v);
  }
  return p;
}

double NgramScorer::logprob(TokenSpan context, TokenId next) const {
  return std::log(probability(context, next));
}

std::string NgramScorer::name() const {
  return "ngram(order=" + std::to_string(config_.order) + ")";
}

RemoteScorer::RemoteScorer(std::string endpoint, const Vocabulary& vocab,
                           std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), vocab_(vocab), timeout_(timeout) {
  parse_endpoint(endpoint_);
}

double RemoteScorer::logprob(TokenSpan context, TokenId next) const {
  return continuation_logprobs(context, TokenSpan(&next, 1)).front();
}

std::vector<double> RemoteScorer::continuation_logprobs(TokenSpan context,
                                                        TokenSpan continuation) const {
  const auto ep = parse_endpoint(endpoint_);
  httplib::Client client(ep.scheme_host_port);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  ordered_json body;
  body["context"] = to_surfaces(context, vocab_);
  body["continuation"] = to_surfaces(continuation, vocab_);
  auto res = client.Post(ep.base_path + "/v1/logprobs", body.dump(), "application/json");
  if (!res) {
    throw ScorerError("logprob request failed: " + httplib::to_string(res.error()), 0);
  }
  if (res->status < 200 || res->status >= 300) {
    throw ScorerError("logprob server returned " + std::to_string(res->status), 0);
  }
  auto parsed = json::parse(res->body, nullptr, false);
  if (!parsed.is_object() || !parsed.contains("logprobs") || !parsed["logprobs"].is_array()) {
    throw ScorerError("malformed logprob response", 0);
  }
  std::vector<double> out;
  for (std::size_t h = 0; h < parsed["logprobs"].size(); ++h) {
    const auto& v = parsed["logprobs"][h];
    if (!v.is_number() || !std::isfinite(v.get<double>()) || v.get<double>() > 0) {
      throw ScorerError("invalid log-probability in response", h);
    }
    out.push_back(v.get<double>());
  }
  if (out.size() != continuation.size()) {
    throw ScorerError("logprob response length mismatch", std::min(out.size(), continuation.size()));
  }
  return out;
}

double likelihood_lh(TokenSpan context, TokenSpan continuation, const LMScorer& scorer,
                     const CoherenceConfig& config) {
  if (config.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (continuation.empty()) throw std::invalid_argument("continuation must be non-empty");
  const auto window = continuation.first(std::min(config.horizon, continuation.size()));
  double total = 0.0;
  for (double lp : scorer.continuation_logprobs(context, window)) total += lp;
  return total;
}

CoherenceScores coherence_l1_l2(const SplitSummary& split, const LMScorer& scorer,
                                const CoherenceConfig& config) {
  CoherenceScores out;
  if (!split.middle.empty()) out.l1 = likelihood_lh(split.prefix, split.middle, scorer, config);
  if (!split.suffix.empty()) {
    out.l2 = likelihood_lh(concat(split.prefix, split.middle), split.suffix, scorer, config);
  }
  return out;
}

std::string_view to_string(EvalTask task) {
  switch (task) {
    case EvalTask::kMiddle: return "middle";
    case EvalTask::kBegin: return "begin";
    case EvalTask::kEnd: return "end";
    case EvalTask::kAll: return "all";
  }
  return "middle";
}

EvalTask parse_eval_task(std::string_view text) {
  if (text == "middle") return EvalTask::kMiddle;
  if (text == "begin") return EvalTask::kBegin;
  if (text == "end") return EvalTask::kEnd;
  if (text == "all") return EvalTask::kAll;
  throw std::invalid_argument("unknown evaluation mode '" + std::string(text) + "'");
}

EvalSet make_eval_set(std::span<const DatasetRecord> corpus, Vocabulary& vocab, EvalTask task,
                      std::uint64_t seed, std::size_t min_target_len) {
  EvalSet set;
  for (std::size_t r = 0; r < corpus.size(); ++r) {
    const auto& rec = corpus[r];
    auto summary = tokenize(rec.summary, vocab);
    if (summary.size() < std::max<std::size_t>(min_target_len, 1)) {
      set.skipped_ids.push_back(rec.id);
      continue;
    }
    EvalItem item;
    item.id = rec.id;
    item.document = tokenize(rec.document, vocab);
    SplitRng rng(seed, r);
    switch (task) {
      case EvalTask::kAll:
        item.split = split_summary(summary, 0, summary.size(), rec.id);
        break;
      case EvalTask::kMiddle: {
        auto spec = sample_split_for_mode(summary.size(), FimMode::kMiddle, min_target_len, rng);
        item.split = split_summary(summary, spec.i, spec.j, rec.id);
        break;
      }
      case EvalTask::kBegin:
      case EvalTask::kEnd: {
        auto mode = task == EvalTask::kBegin ? FimMode::kBegin : FimMode::kEnd;
        auto spec = sample_split_for_mode(summary.size(), mode, min_target_len, rng);
        item.split = split_summary(summary, spec.i, spec.i, rec.id);
        break;
      }
    }
    set.items.push_back(std::move(item));
  }
  return set;
}

GenerationRequest eval_request(const EvalItem& item, EvalTask task, std::size_t max_new_tokens) {
  GenerationRequest r;
  r.document = item.document;
  r.num_suggestions = 1;
  r.max_new_tokens = max_new_tokens;
  switch (task) {
    case EvalTask::kMiddle:
      r.mode = FimMode::kMiddle;
      r.prefix = item.split.prefix;
      r.suffix = item.split.suffix;
      break;
    case EvalTask::kBegin:
      r.mode = FimMode::kBegin;
      r.suffix = item.split.suffix;
      break;
    case EvalTask::kEnd:
      r.mode = FimMode::kEnd;
      r.prefix = item.split.prefix;
      break;
    case EvalTask::kAll:
      r.mode = FimMode::kMiddle;
      break;
  }
  return r;
}

TokenSeq eval_target(const EvalItem& item, EvalTask task) {
  switch (task) {
    case EvalTask::kMiddle:
    case EvalTask::kAll: return item.split.middle;
    case EvalTask::kBegin: return item.split.prefix;
    case EvalTask::kEnd: return item.split.suffix;
  }
  return {};
}

ordered_json FimEvalReport::to_json() const {
  ordered_json j;
  j["mode"] = to_string(task);
  j["rouge1"] = rouge1.f1;
  j["rouge2"] = rouge2.f1;
  j["rouge1_precision"] = rouge1.precision;
  j["rouge1_recall"] = rouge1.recall;
  j["rouge2_precision"] = rouge2.precision;
  j["rouge2_recall"] = rouge2.recall;
  j["n_items"] = n_items;
  j["n_failed"] = n_failed;
  return j;
}

FimEvalReport eval_fim(std::span<const EvalItem> items, const GenerationBackend& backend,
                       EvalTask task, std::size_t max_new_tokens) {
  FimEvalReport report;
  report.task = task;
  report.n_items = items.size();
  Mean p1, r1, f1, p2, r2, f2;
  for (const auto& item : items) {
    std::vector<Suggestion> out;
    try {
      out = backend.generate(eval_request(item, task, max_new_tokens));
    } catch (const std::exception&) {
      ++report.n_failed;
      report.failed_ids.push_back(item.id);
      continue;
    }
    const TokenSeq generated = out.empty() ? TokenSeq{} : out.front().tokens;
    const TokenSeq target = eval_target(item, task);
    auto s1 = rouge_n(generated, target, 1);
    auto s2 = rouge_n(generated, target, 2);
    p1.add(s1.precision);
    r1.add(s1.recall);
    f1.add(s1.f1);
    p2.add(s2.precision);
    r2.add(s2.recall);
    f2.add(s2.f1);
  }
  report.rouge1 = {p1.value().value_or(0), r1.value().value_or(0), f1.value().value_or(0), 1};
  report.rouge2 = {p2.value().value_or(0), r2.value().value_or(0), f2.value().value_or(0), 2};
  return report;
}

std::unique_ptr<GenerationBackend> make_echo_backend(std::span<const EvalItem> items,
                                                     EvalTask task) {
  using Key = std::tuple<int, TokenSeq, TokenSeq, TokenSeq>;
  std::map<Key, TokenSeq> golden;
  for (const auto& item : items) {
    auto r = eval_request(item, task);
    golden.emplace(Key{static_cast<int>(r.mode), r.prefix, r.suffix, r.document},
                   eval_target(item, task));
  }
  return std::make_unique<ScriptedBackend>(
      [golden = std::move(golden)](const GenerationRequest& r) -> std::vector<Suggestion> {
        auto it = golden.find(Key{static_cast<int>(r.mode), r.prefix, r.suffix, r.document});
        if (it == golden.end()) return {};
        return {Suggestion{it->second, 0.0, true}};
      });
}

ordered_json CoherenceReport::to_json() const {
  ordered_json j;
  j["l1_mean"] = l1_mean ? ordered_json(*l1_mean) : ordered_json(nullptr);
  j["l2_mean"] = l2_mean ? ordered_json(*l2_mean) : ordered_json(nullptr);
  j["n_items"] = n_items;
  j["n_l1"] = n_l1;
  j["n_l2"] = n_l2;
  j["n_failed"] = n_failed;
  j["horizon"] = horizon;
  j["middle_source"] = middle_source;
  return j;
}

CoherenceReport eval_coherence(std::span<const EvalItem> items, const LMScorer& scorer,
                               const CoherenceConfig& config,
                               const GenerationBackend* generator) {
  CoherenceReport report;
  report.n_items = items.size();
  report.horizon = config.horizon;
  report.middle_source = generator ? "generated" : "golden";
  Mean l1, l2;
  for (const auto& item : items) {
    SplitSummary split = item.split;
    try {
      if (generator) {
        auto out = generator->generate(eval_request(item, EvalTask::kMiddle));
        split.middle = out.empty() ? TokenSeq{} : out.front().tokens;
      }
      auto scores = coherence_l1_l2(split, scorer, config);
      if (scores.l1) l1.add(*scores.l1);
      if (scores.l2) l2.add(*scores.l2);
    } catch (const std::exception&) {
      ++report.n_failed;
    }
  }
  report.l1_mean = l1.value();
  report.l2_mean = l2.value();
  report.n_l1 = l1.n;
  report.n_l2 = l2.n;
  return report;
}

}  // namespace fimedit
