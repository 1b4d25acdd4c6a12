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

#include "fimedit/edit_region.hpp"

#include <algorithm>

namespace fimedit {

TokenSeq FillRegion::generation_prefix() const {
  TokenSeq out = prefix;
  out.insert(out.end(), human_start.begin(), human_start.end());
  return out;
}

FimMode classify_region(TokenSpan prefix, TokenSpan human_start, TokenSpan suffix) {
  const bool no_left = prefix.empty() && human_start.empty();
  if (no_left && suffix.empty()) return FimMode::kMiddle;
  if (no_left) return FimMode::kBegin;
  if (suffix.empty()) return FimMode::kEnd;
  return FimMode::kMiddle;
}

FillRegion detect_fill_region(const EditEvent& event) {
  const auto& old_s = event.old_summary;
  const auto& new_s = event.new_summary;
  FillRegion region;
  if (old_s == new_s) {
    if (!event.regenerate) throw NoEditError();
    region.replaced = old_s;
    region.mode = FimMode::kMiddle;
    return region;
  }

  const std::size_t bound = std::min(old_s.size(), new_s.size());
  std::size_t p = 0;
  while (p < bound && old_s[p] == new_s[p]) ++p;
  std::size_t s = 0;
  while (p + s < bound && old_s[old_s.size() - 1 - s] == new_s[new_s.size() - 1 - s]) ++s;

  auto at = [](const TokenSeq& v, std::size_t from, std::size_t to) {
    return TokenSeq(v.begin() + static_cast<std::ptrdiff_t>(from),
                    v.begin() + static_cast<std::ptrdiff_t>(to));
  };
  region.prefix = at(new_s, 0, p);
  region.suffix = at(new_s, new_s.size() - s, new_s.size());
  region.human_start = at(new_s, p, new_s.size() - s);
  region.replaced = at(old_s, p, old_s.size() - s);
  region.mode = classify_region(region.prefix, region.human_start, region.suffix);
  return region;
}

TokenSeq extract_human_start(std::string_view raw_segment, Vocabulary& vocab) {
  if (raw_segment.ends_with("  ")) raw_segment.remove_suffix(2);
  return tokenize(raw_segment, vocab);
}

}  // namespace fimedit
