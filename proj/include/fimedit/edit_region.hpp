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

#include <cstdint>
#include <stdexcept>
#include <string_view>

#include "fimedit/fim_format.hpp"
#include "fimedit/tokenization.hpp"

namespace fimedit {

struct EditEvent {
  TokenSeq old_summary;
  TokenSeq new_summary;
  std::int64_t timestamp_ms = 0;
  // Caller asks for a whole-summary regeneration; permits old == new.
  bool regenerate = false;
};

/// The span a suggestion will replace, decomposed as
///   new_summary == prefix ∘ human_start ∘ suffix
///   old_summary == prefix ∘ replaced ∘ suffix
/// A regeneration request is the exception: every part except `replaced` is
/// empty.
struct FillRegion {
  TokenSeq prefix;
  TokenSeq human_start;
  TokenSeq suffix;
  TokenSeq replaced;
  FimMode mode = FimMode::kMiddle;

  /// prefix ∘ human_start, the context a backend continues from.
  TokenSeq generation_prefix() const;

  bool operator==(const FillRegion&) const = default;
};

class NoEditError : public std::runtime_error {
 public:
  NoEditError() : std::runtime_error("no edit detected") {}
};

/// Begin only when nothing precedes the hole, End when nothing follows it,
/// Middle otherwise (including the empty-context whole-summary case).
FimMode classify_region(TokenSpan prefix, TokenSpan human_start, TokenSpan suffix);

/// Longest common prefix P first, then the longest common suffix S of what
/// remains, with |P| + |S| <= min(|old|, |new|).
FillRegion detect_fill_region(const EditEvent& event);

/// Tokens the user typed into the hole. A trailing two-space marker is
/// stripped; without it the whole segment still counts as the start.
TokenSeq extract_human_start(std::string_view raw_segment, Vocabulary& vocab);

}  // namespace fimedit
