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

#include "fimedit/backend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <httplib.h>

#include "fimedit/datagen.hpp"

namespace fimedit {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

bool starts_with(TokenSpan seq, TokenSpan head) {
  return seq.size() >= head.size() && std::equal(head.begin(), head.end(), seq.begin());
}

std::uint64_t hash_request(const GenerationRequest& r) {
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(r.mode));
  auto mix = [&h](TokenSpan seq) {
    h = splitmix64(h ^ seq.size());
    for (auto id : seq) h = splitmix64(h ^ id);
  };
  mix(r.prefix);
  mix(r.suffix);
  mix(r.document);
  return h;
}

std::vector<std::string> strings_at(const json& body, const char* field, Vocabulary&) {
  const auto& arr = body.at(field);
  if (!arr.is_array()) throw std::invalid_argument(std::string(field) + " must be an array");
  std::vector<std::string> out;
  for (const auto& el : arr) {
    if (!el.is_string()) throw std::invalid_argument(std::string(field) + " must hold strings");
    out.push_back(el.get<std::string>());
  }
  return out;
}

// Content tokens from the wire: non-empty, whitespace-free, never sentinels.
TokenSeq content_from_wire(const std::vector<std::string>& words, Vocabulary& vocab,
                           const char* field) {
  TokenSeq out;
  out.reserve(words.size());
  for (const auto& w : words) {
    if (w.empty() || w.find_first_of(" \t\r\n") != std::string::npos) {
      throw std::invalid_argument(std::string(field) + " holds an invalid token");
    }
    auto id = vocab.intern(w);
    if (is_sentinel(id)) throw std::invalid_argument(std::string(field) + " holds a sentinel");
    out.push_back(id);
  }
  return out;
}

}  // namespace

std::string_view to_string(BackendErrorKind kind) {
  switch (kind) {
    case BackendErrorKind::kTransport: return "transport";
    case BackendErrorKind::kTimeout: return "timeout";
    case BackendErrorKind::kStatus: return "status";
    case BackendErrorKind::kMalformed: return "malformed";
  }
  return "transport";
}

void GenerationRequest::validate() const {
  if (num_suggestions < 1) throw std::invalid_argument("num_suggestions must be >= 1");
  if (max_new_tokens < 1) throw std::invalid_argument("max_new_tokens must be >= 1");
  if (human_start_len > prefix.size()) {
    throw std::invalid_argument("human start longer than the prefix");
  }
  if (contains_sentinel(prefix) || contains_sentinel(suffix) || contains_sentinel(document)) {
    throw std::invalid_argument("request content holds a sentinel id");
  }
}

std::vector<Suggestion> finalize_suggestions(const GenerationRequest& request,
                                             std::vector<Suggestion> raw,
                                             std::size_t* dropped) {
  const auto start = request.human_start();
  for (auto& s : raw) {
    if (contains_sentinel(s.tokens)) {
      throw BackendError(BackendErrorKind::kMalformed, "suggestion holds a sentinel id");
    }
    if (!start.empty()) s.tokens.insert(s.tokens.begin(), start.begin(), start.end());
  }
  std::stable_sort(raw.begin(), raw.end(),
                   [](const Suggestion& a, const Suggestion& b) { return a.score > b.score; });
  std::vector<Suggestion> out;
  std::set<TokenSeq> seen;
  std::size_t duplicates = 0;
  for (auto& s : raw) {
    if (!seen.insert(s.tokens).second) {
      ++duplicates;
      continue;
    }
    if (out.size() < request.num_suggestions) out.push_back(std::move(s));
  }
  if (dropped) *dropped = duplicates;
  return out;
}

std::vector<Suggestion> GenerationBackend::generate(const GenerationRequest& request) const {
  request.validate();
  std::size_t dropped = 0;
  auto out = finalize_suggestions(request, propose(request), &dropped);
  duplicates_dropped_ += dropped;
  return out;
}

ScriptedBackend::ScriptedBackend(std::vector<TokenSeq> replies)
    : responder_([replies = std::move(replies)](const GenerationRequest&) {
        std::vector<Suggestion> out;
        for (std::size_t k = 0; k < replies.size(); ++k) {
          out.push_back({replies[k], -static_cast<double>(k), true});
        }
        return out;
      }) {}

ScriptedBackend::ScriptedBackend(Responder responder) : responder_(std::move(responder)) {}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_texts(
    const std::vector<std::string>& replies, Vocabulary& vocab) {
  std::vector<TokenSeq> seqs;
  for (const auto& r : replies) seqs.push_back(tokenize(r, vocab));
  return std::make_unique<ScriptedBackend>(std::move(seqs));
}

std::vector<Suggestion> ScriptedBackend::propose(const GenerationRequest& request) const {
  return responder_(request);
}

HeuristicBackend::HeuristicBackend(Vocabulary& vocab)
    : delimiters_{vocab.intern("."), vocab.intern("!"), vocab.intern("?")} {}

bool HeuristicBackend::is_delimiter(TokenId id) const {
  return std::find(delimiters_.begin(), delimiters_.end(), id) != delimiters_.end();
}

std::vector<HeuristicBackend::Candidate> HeuristicBackend::score_candidates(
    const GenerationRequest& request) const {
  std::vector<Candidate> out;
  std::set<TokenSeq> seen;
  TokenSeq current;
  auto flush = [&] {
    if (!current.empty() && seen.insert(current).second) out.push_back({current});
    current.clear();
  };
  for (auto id : request.document) {
    current.push_back(id);
    if (is_delimiter(id)) flush();
  }
  flush();

  std::map<TokenId, double> freq;
  double total = 0;
  for (auto id : request.document) {
    if (is_delimiter(id)) continue;
    freq[id] += 1;
    total += 1;
  }
  std::set<TokenId> context(request.prefix.begin(), request.prefix.end());
  context.insert(request.suffix.begin(), request.suffix.end());

  double best = 0;
  for (auto& c : out) {
    double sum = 0;
    std::size_t words = 0;
    std::set<TokenId> distinct;
    for (auto id : c.sentence) {
      if (is_delimiter(id)) continue;
      sum += freq[id] / total;
      ++words;
      distinct.insert(id);
    }
    c.salience = words ? sum / static_cast<double>(words) : 0.0;
    best = std::max(best, c.salience);
    std::size_t overlap = 0;
    for (auto id : distinct) overlap += context.count(id);
    c.redundancy = distinct.empty() ? 1.0
                                    : static_cast<double>(overlap) /
                                          static_cast<double>(distinct.size());
  }
  for (auto& c : out) {
    if (best > 0) c.salience /= best;
    c.score = (c.salience - c.redundancy + 1.0) / 2.0;
  }
  return out;
}

std::vector<Suggestion> HeuristicBackend::propose(const GenerationRequest& request) const {
  std::vector<Suggestion> out;
  const auto start = request.human_start();
  for (auto& c : score_candidates(request)) {
    TokenSeq tokens = std::move(c.sentence);
    // A sentence that already opens with the typed start continues after it.
    if (!start.empty() && starts_with(tokens, start)) {
      tokens.erase(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(start.size()));
      if (tokens.empty()) continue;
    }
    if (tokens.size() > request.max_new_tokens) tokens.resize(request.max_new_tokens);
    out.push_back({std::move(tokens), c.score, true});
  }
  return out;
}

RandomTokenBackend::RandomTokenBackend(const Vocabulary& vocab, std::uint64_t seed,
                                       std::size_t length)
    : vocab_(vocab), seed_(seed), length_(length) {}

std::vector<Suggestion> RandomTokenBackend::propose(const GenerationRequest& request) const {
  const std::size_t size = vocab_.size();
  if (size <= kNumSentinels) return {};
  SplitRng rng(seed_, hash_request(request));
  const std::size_t len = std::min(length_, request.max_new_tokens);
  std::vector<Suggestion> out;
  for (std::size_t k = 0; k < request.num_suggestions; ++k) {
    Suggestion s;
    for (std::size_t t = 0; t < len; ++t) {
      s.tokens.push_back(static_cast<TokenId>(kNumSentinels + rng.below(size - kNumSentinels)));
    }
    s.score = -static_cast<double>(k);
    out.push_back(std::move(s));
  }
  return out;
}

ordered_json request_to_wire(const GenerationRequest& r, const Vocabulary& vocab) {
  ordered_json j;
  j["mode"] = to_string(r.mode);
  j["prefix"] = to_surfaces(r.prefix, vocab);
  j["suffix"] = to_surfaces(r.suffix, vocab);
  j["document"] = to_surfaces(r.document, vocab);
  j["num_suggestions"] = r.num_suggestions;
  j["max_new_tokens"] = r.max_new_tokens;
  return j;
}

GenerationRequest request_from_wire(const json& body, Vocabulary& vocab) {
  GenerationRequest r;
  r.mode = parse_fim_mode(body.at("mode").get<std::string>());
  r.prefix = content_from_wire(strings_at(body, "prefix", vocab), vocab, "prefix");
  r.suffix = content_from_wire(strings_at(body, "suffix", vocab), vocab, "suffix");
  r.document = content_from_wire(strings_at(body, "document", vocab), vocab, "document");
  r.num_suggestions = body.at("num_suggestions").get<std::size_t>();
  r.max_new_tokens = body.at("max_new_tokens").get<std::size_t>();
  r.validate();
  return r;
}

ordered_json suggestions_to_wire(const std::vector<Suggestion>& suggestions,
                                 const Vocabulary& vocab) {
  ordered_json arr = ordered_json::array();
  for (const auto& s : suggestions) {
    ordered_json j;
    j["tokens"] = to_surfaces(s.tokens, vocab);
    j["score"] = s.score;
    j["terminated"] = s.terminated;
    arr.push_back(std::move(j));
  }
  ordered_json body;
  body["suggestions"] = std::move(arr);
  return body;
}

std::vector<Suggestion> suggestions_from_wire(const json& body, Vocabulary& vocab) {
  try {
    const auto& arr = body.at("suggestions");
    if (!arr.is_array()) throw std::invalid_argument("suggestions must be an array");
    std::vector<Suggestion> out;
    for (const auto& el : arr) {
      Suggestion s;
      s.tokens = content_from_wire(strings_at(el, "tokens", vocab), vocab, "tokens");
      const auto& score = el.at("score");
      if (!score.is_number()) throw std::invalid_argument("score must be a number");
      s.score = score.get<double>();
      if (!std::isfinite(s.score)) throw std::invalid_argument("score must be finite");
      const auto& term = el.at("terminated");
      if (!term.is_boolean()) throw std::invalid_argument("terminated must be a boolean");
      s.terminated = term.get<bool>();
      out.push_back(std::move(s));
    }
    return out;
  } catch (const std::exception& e) {
    throw BackendError(BackendErrorKind::kMalformed,
                       std::string("malformed infill response: ") + e.what());
  }
}

HttpEndpoint parse_endpoint(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw std::invalid_argument("endpoint must look like http://host:port[/path]");
  }
  auto path_start = url.find('/', scheme_end + 3);
  HttpEndpoint ep;
  ep.scheme_host_port = std::string(url.substr(0, path_start));
  if (path_start != std::string_view::npos) {
    ep.base_path = std::string(url.substr(path_start));
    while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  }
  return ep;
}

RemoteBackend::RemoteBackend(std::string endpoint, Vocabulary& vocab,
                             std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), vocab_(vocab), timeout_(timeout) {
  parse_endpoint(endpoint_);
}

std::vector<Suggestion> RemoteBackend::propose(const GenerationRequest& request) const {
  const auto ep = parse_endpoint(endpoint_);
  httplib::Client client(ep.scheme_host_port);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);

  const auto body = request_to_wire(request, vocab_).dump();
  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(ep.base_path + "/v1/infill", body, "application/json");
  if (!res) {
    const auto elapsed = std::chrono::steady_clock::now() - started;
    const bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                           elapsed >= timeout_ - std::chrono::milliseconds(timeout_.count() / 10);
    throw BackendError(timed_out ? BackendErrorKind::kTimeout : BackendErrorKind::kTransport,
                       "infill request to " + endpoint_ + " failed: " +
                           httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    std::string detail;
    auto parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_object() && parsed.contains("error") && parsed["error"].is_string()) {
      detail = ": " + parsed["error"].get<std::string>();
    }
    throw BackendError(BackendErrorKind::kStatus,
                       "infill server returned " + std::to_string(res->status) + detail,
                       res->status);
  }
  auto parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) {
    throw BackendError(BackendErrorKind::kMalformed, "infill response is not JSON");
  }
  return suggestions_from_wire(parsed, vocab_);
}

std::unique_ptr<GenerationBackend> make_backend(std::string_view spec, Vocabulary& vocab,
                                                const BackendOptions& options) {
  auto colon = spec.find(':');
  auto kind = spec.substr(0, colon);
  auto arg = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  if (kind == "heuristic" && arg.empty()) return std::make_unique<HeuristicBackend>(vocab);
  if (kind == "remote" && !arg.empty()) {
    return std::make_unique<RemoteBackend>(std::string(arg), vocab, options.timeout);
  }
  if (kind == "random") {
    std::uint64_t seed = arg.empty() ? options.seed : std::stoull(std::string(arg));
    return std::make_unique<RandomTokenBackend>(vocab, seed);
  }
  if (kind == "scripted") {
    if (arg.empty()) {
      return ScriptedBackend::from_texts(options.scripted_replies, vocab);
    }
    if (arg == "echo") {
      throw std::invalid_argument("scripted:echo needs golden targets; it is only available "
                                  "to evaluation commands");
    }
    std::ifstream in{std::string(arg)};
    if (!in) throw std::invalid_argument("cannot open scripted replies " + std::string(arg));
    auto replies = json::parse(in).get<std::vector<std::string>>();
    return ScriptedBackend::from_texts(replies, vocab);
  }
  throw std::invalid_argument("unknown backend spec '" + std::string(spec) + "'");
}

}  // namespace fimedit
