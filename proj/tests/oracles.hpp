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

// Independent reference implementations used by unit and acceptance tests.
// They share no code with the library beyond the token types.

#include <cstddef>
#include <utility>
#include <vector>

#include "fimedit/edit_region.hpp"
#include "fimedit/tokenization.hpp"

namespace fimedit::oracle {

struct Decomposition {
  std::size_t prefix_len = 0;
  std::size_t suffix_len = 0;
};

/// Enumerates every (P, S) with P a common prefix, S a common suffix and
/// P + S <= min(|old|, |new|); keeps the lexicographically largest (P, S).
inline Decomposition best_decomposition(const TokenSeq& old_s, const TokenSeq& new_s) {
  const std::size_t bound = old_s.size() < new_s.size() ? old_s.size() : new_s.size();
  Decomposition best;
  bool found = false;
  for (std::size_t p = 0; p <= bound; ++p) {
    bool prefix_ok = true;
    for (std::size_t x = 0; x < p; ++x) prefix_ok = prefix_ok && old_s[x] == new_s[x];
    if (!prefix_ok) continue;
    for (std::size_t s = 0; p + s <= bound; ++s) {
      bool suffix_ok = true;
      for (std::size_t x = 1; x <= s; ++x) {
        suffix_ok = suffix_ok && old_s[old_s.size() - x] == new_s[new_s.size() - x];
      }
      if (!suffix_ok) continue;
      if (!found || p > best.prefix_len || (p == best.prefix_len && s > best.suffix_len)) {
        best = {p, s};
        found = true;
      }
    }
  }
  return best;
}

inline FillRegion expected_region(const TokenSeq& old_s, const TokenSeq& new_s) {
  auto d = best_decomposition(old_s, new_s);
  FillRegion r;
  r.prefix.assign(new_s.begin(), new_s.begin() + static_cast<std::ptrdiff_t>(d.prefix_len));
  r.suffix.assign(new_s.end() - static_cast<std::ptrdiff_t>(d.suffix_len), new_s.end());
  r.human_start.assign(new_s.begin() + static_cast<std::ptrdiff_t>(d.prefix_len),
                       new_s.end() - static_cast<std::ptrdiff_t>(d.suffix_len));
  r.replaced.assign(old_s.begin() + static_cast<std::ptrdiff_t>(d.prefix_len),
                    old_s.end() - static_cast<std::ptrdiff_t>(d.suffix_len));
  const bool nothing_left = r.prefix.empty() && r.human_start.empty();
  if (nothing_left && !r.suffix.empty()) r.mode = FimMode::kBegin;
  else if (!nothing_left && r.suffix.empty()) r.mode = FimMode::kEnd;
  else r.mode = FimMode::kMiddle;
  return r;
}

/// Every sequence over {base, base+1, ..., base+alphabet-1} of length <= max_len.
inline std::vector<TokenSeq> all_sequences(std::size_t max_len, TokenId alphabet, TokenId base) {
  std::vector<TokenSeq> out{{}};
  std::vector<TokenSeq> frontier{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<TokenSeq> next;
    for (const auto& s : frontier) {
      for (TokenId a = 0; a < alphabet; ++a) {
        auto t = s;
        t.push_back(base + a);
        next.push_back(t);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

struct Rouge {
  double precision = 0, recall = 0, f1 = 0;
};

/// Clipped overlap by explicit one-to-one matching: each candidate n-gram
/// occurrence claims the first unclaimed equal occurrence in the reference.
inline Rouge rouge_by_matching(const TokenSeq& cand, const TokenSeq& ref, std::size_t n) {
  auto grams = [n](const TokenSeq& s) {
    std::vector<TokenSeq> g;
    for (std::size_t i = 0; i + n <= s.size(); ++i) {
      g.emplace_back(s.begin() + static_cast<std::ptrdiff_t>(i),
                     s.begin() + static_cast<std::ptrdiff_t>(i + n));
    }
    return g;
  };
  auto cg = grams(cand);
  auto rg = grams(ref);
  std::vector<bool> used(rg.size(), false);
  std::size_t matched = 0;
  for (const auto& g : cg) {
    for (std::size_t k = 0; k < rg.size(); ++k) {
      if (!used[k] && rg[k] == g) {
        used[k] = true;
        ++matched;
        break;
      }
    }
  }
  Rouge r;
  if (!cg.empty()) r.precision = static_cast<double>(matched) / static_cast<double>(cg.size());
  if (!rg.empty()) r.recall = static_cast<double>(matched) / static_cast<double>(rg.size());
  if (r.precision + r.recall > 0) r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

}  // namespace fimedit::oracle
