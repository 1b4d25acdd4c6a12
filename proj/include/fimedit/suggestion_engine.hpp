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

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "fimedit/backend.hpp"
#include "fimedit/edit_region.hpp"

namespace fimedit {

struct SuggestionSet {
  FillRegion region;
  std::vector<Suggestion> suggestions;
  std::vector<TokenSeq> previews;  // previews[i] == splice(prefix, suggestions[i], suffix)
  double latency_ms = 0.0;
};

/// A backend failure during a suggestion cycle. Carries the region so the
/// caller can retry without re-diffing.
class SuggestError : public BackendError {
 public:
  SuggestError(const BackendError& cause, FillRegion region)
      : BackendError(cause), region_(std::move(region)) {}
  const FillRegion& region() const { return region_; }

 private:
  FillRegion region_;
};

struct SuggestOptions {
  std::size_t k = kDefaultSuggestions;
  std::size_t max_new_tokens = 64;
};

SuggestionSet suggest(const EditEvent& event, TokenSpan document,
                      const GenerationBackend& backend, const SuggestOptions& options = {});

/// The preview at `index`; it becomes the new editing state.
TokenSeq apply_choice(const SuggestionSet& set, std::size_t index);

/// Runs suggestion cycles against one backend and counts triggers per
/// document.
class SuggestionEngine {
 public:
  SuggestionEngine(const GenerationBackend& backend, SuggestOptions options = {})
      : backend_(backend), options_(options) {}

  SuggestionSet suggest(const std::string& document_id, const EditEvent& event,
                        TokenSpan document);
  std::size_t triggers(const std::string& document_id) const;
  const SuggestOptions& options() const { return options_; }

 private:
  const GenerationBackend& backend_;
  SuggestOptions options_;
  mutable std::mutex mutex_;
  std::map<std::string, std::size_t> triggers_;
};

}  // namespace fimedit
