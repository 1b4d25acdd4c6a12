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

#include "fimedit/suggestion_engine.hpp"

#include <algorithm>
#include <chrono>
#include <set>

namespace fimedit {

SuggestionSet suggest(const EditEvent& event, TokenSpan document,
                      const GenerationBackend& backend, const SuggestOptions& options) {
  if (options.k < 1) throw std::invalid_argument("k must be >= 1");
  SuggestionSet set;
  set.region = detect_fill_region(event);
  const auto& region = set.region;

  GenerationRequest request;
  request.mode = region.mode;
  request.prefix = region.generation_prefix();
  request.human_start_len = region.human_start.size();
  request.suffix = region.suffix;
  request.document.assign(document.begin(), document.end());
  request.num_suggestions = options.k;
  request.max_new_tokens = options.max_new_tokens;

  const auto started = std::chrono::steady_clock::now();
  try {
    set.suggestions = backend.generate(request);
  } catch (const BackendError& e) {
    throw SuggestError(e, region);
  }
  set.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
          .count();

  // The backend contract already guarantees these; a violation is a bug.
  std::set<TokenSeq> seen;
  for (const auto& s : set.suggestions) {
    if (!seen.insert(s.tokens).second) throw std::logic_error("backend returned duplicates");
    const auto& start = region.human_start;
    if (s.tokens.size() < start.size() ||
        !std::equal(start.begin(), start.end(), s.tokens.begin())) {
      throw std::logic_error("suggestion lost the human start");
    }
    set.previews.push_back(splice(region.prefix, s.tokens, region.suffix));
  }
  return set;
}

TokenSeq apply_choice(const SuggestionSet& set, std::size_t index) {
  if (index >= set.previews.size()) {
    throw std::out_of_range("choice " + std::to_string(index) + " out of range for " +
                            std::to_string(set.previews.size()) + " suggestions");
  }
  return set.previews[index];
}

SuggestionSet SuggestionEngine::suggest(const std::string& document_id, const EditEvent& event,
                                        TokenSpan document) {
  {
    std::scoped_lock lock(mutex_);
    ++triggers_[document_id];
  }
  return fimedit::suggest(event, document, backend_, options_);
}

std::size_t SuggestionEngine::triggers(const std::string& document_id) const {
  std::scoped_lock lock(mutex_);
  auto it = triggers_.find(document_id);
  return it == triggers_.end() ? 0 : it->second;
}

}  // namespace fimedit
