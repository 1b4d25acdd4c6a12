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

#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fimedit/fim_format.hpp"

namespace fimedit {
namespace {

struct Fixture {
  Vocabulary v;
  TokenSeq doc = tokenize("Courts ruled on trade. Markets rose. Exporters cheered!", v);
  TokenSeq t(const std::string& s) { return tokenize(s, v); }
};

TEST(Suggest, ScriptedCycle) {
  Fixture f;
  auto backend = ScriptedBackend::from_texts({"fell sharply", "rose", "fell sharply", "held"}, f.v);
  EditEvent e{f.t("Stocks rose today ."), f.t("Stocks today ."), 0, false};
  auto set = suggest(e, f.doc, *backend);
  EXPECT_EQ(set.region.prefix, f.t("Stocks"));
  EXPECT_EQ(set.region.suffix, f.t("today ."));
  EXPECT_EQ(set.region.replaced, f.t("rose"));
  ASSERT_EQ(set.suggestions.size(), 3u);
  EXPECT_EQ(detokenize(set.previews[0], f.v), "Stocks fell sharply today .");
  EXPECT_EQ(detokenize(set.previews[1], f.v), "Stocks rose today .");
  EXPECT_EQ(detokenize(set.previews[2], f.v), "Stocks held today .");
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(set.previews[k],
              splice(set.region.prefix, set.suggestions[k].tokens, set.region.suffix));
    EXPECT_EQ(apply_choice(set, k), set.previews[k]);
  }
  EXPECT_THROW(apply_choice(set, 3), std::out_of_range);
  EXPECT_GE(set.latency_ms, 0.0);
}

TEST(Suggest, HumanStartForcedThroughCycle) {
  Fixture f;
  auto backend = ScriptedBackend::from_texts({"is changing .", "matters ."}, f.v);
  EditEvent e{f.t("Trade fell . Prices rose ."), f.t("Trade fell . Business practice"), 0, false};
  auto set = suggest(e, f.doc, *backend);
  EXPECT_EQ(set.region.mode, FimMode::kEnd);
  EXPECT_EQ(set.region.human_start, f.t("Business practice"));
  for (const auto& s : set.suggestions) {
    EXPECT_EQ(TokenSeq(s.tokens.begin(), s.tokens.begin() + 2), f.t("Business practice"));
  }
  EXPECT_EQ(detokenize(set.previews[1], f.v), "Trade fell . Business practice matters .");
}

TEST(Suggest, RequestCarriesRegion) {
  Fixture f;
  GenerationRequest seen;
  ScriptedBackend backend([&](const GenerationRequest& r) {
    seen = r;
    return std::vector<Suggestion>{};
  });
  EditEvent e{f.t("A B C D"), f.t("A X D"), 0, false};
  auto set = suggest(e, f.doc, backend, SuggestOptions{2, 9});
  EXPECT_TRUE(set.suggestions.empty());
  EXPECT_EQ(seen.mode, FimMode::kMiddle);
  EXPECT_EQ(seen.prefix, f.t("A X"));
  EXPECT_EQ(seen.human_start_len, 1u);
  EXPECT_EQ(seen.suffix, f.t("D"));
  EXPECT_EQ(seen.document, f.doc);
  EXPECT_EQ(seen.num_suggestions, 2u);
  EXPECT_EQ(seen.max_new_tokens, 9u);
}

TEST(Suggest, BeginModeWhenLeadingSpanDeleted) {
  Fixture f;
  GenerationRequest seen;
  ScriptedBackend backend([&](const GenerationRequest& r) {
    seen = r;
    return std::vector<Suggestion>{{f.t("Yesterday"), 0, true}};
  });
  auto set = suggest({f.t("Today markets rose ."), f.t("markets rose ."), 0, false}, f.doc, backend);
  EXPECT_EQ(seen.mode, FimMode::kBegin);
  EXPECT_TRUE(seen.prefix.empty());
  EXPECT_EQ(detokenize(set.previews[0], f.v), "Yesterday markets rose .");
}

TEST(Suggest, NoEditPropagates) {
  Fixture f;
  auto backend = ScriptedBackend::from_texts({"x"}, f.v);
  EXPECT_THROW(suggest({f.t("a b"), f.t("a b"), 0, false}, f.doc, *backend), NoEditError);
}

TEST(Suggest, BackendFailureCarriesRegion) {
  Fixture f;
  ScriptedBackend backend([](const GenerationRequest&) -> std::vector<Suggestion> {
    throw BackendError(BackendErrorKind::kTimeout, "slow");
  });
  try {
    suggest({f.t("a b c"), f.t("a c"), 0, false}, f.doc, backend);
    FAIL();
  } catch (const SuggestError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::kTimeout);
    EXPECT_EQ(e.region().replaced, f.t("b"));
  }
}

TEST(Suggest, IdempotentWithDeterministicBackend) {
  Fixture f;
  HeuristicBackend backend(f.v);
  EditEvent e{f.t("Courts ruled . Markets rose ."), f.t("Courts ruled ."), 0, false};
  auto a = suggest(e, f.doc, backend);
  auto b = suggest(e, f.doc, backend);
  EXPECT_EQ(a.region, b.region);
  EXPECT_EQ(a.previews, b.previews);
  ASSERT_EQ(a.suggestions.size(), b.suggestions.size());
  for (std::size_t k = 0; k < a.suggestions.size(); ++k) {
    EXPECT_EQ(a.suggestions[k].tokens, b.suggestions[k].tokens);
    EXPECT_EQ(a.suggestions[k].score, b.suggestions[k].score);
  }
}

TEST(Engine, CountsTriggersPerDocument) {
  Fixture f;
  auto backend = ScriptedBackend::from_texts({"x"}, f.v);
  SuggestionEngine engine(*backend);
  engine.suggest("d1", {f.t("a b"), f.t("a c"), 0, false}, f.doc);
  engine.suggest("d1", {f.t("a c"), f.t("a d"), 0, false}, f.doc);
  engine.suggest("d2", {f.t("a"), f.t("b"), 0, false}, f.doc);
  EXPECT_EQ(engine.triggers("d1"), 2u);
  EXPECT_EQ(engine.triggers("d2"), 1u);
  EXPECT_EQ(engine.triggers("d3"), 0u);
}

TEST(SuggestProperty, PreviewsSpliceAndChoiceSafety) {
  std::mt19937_64 rng(8);
  Vocabulary v;
  std::vector<TokenId> alphabet;
  for (const char* w : {"a", "b", "c", "d", "."}) alphabet.push_back(v.intern(w));
  auto random_seq = [&](std::size_t max) {
    std::uniform_int_distribution<std::size_t> len(0, max), pick(0, alphabet.size() - 1);
    TokenSeq s(len(rng));
    for (auto& t : s) t = alphabet[pick(rng)];
    return s;
  };
  HeuristicBackend heuristic(v);
  ScriptedBackend scripted([&](const GenerationRequest& r) {
    std::vector<Suggestion> out;
    for (std::size_t k = 0; k < 4; ++k) {
      TokenSeq t(r.document.begin(), r.document.begin() + std::min(r.document.size(), k));
      out.push_back({t, 0.0, true});
    }
    return out;
  });
  for (int trial = 0; trial < 1000; ++trial) {
    auto o = random_seq(8), n = random_seq(8);
    if (o == n) continue;
    auto doc = random_seq(16);
    for (const GenerationBackend* b :
         std::initializer_list<const GenerationBackend*>{&heuristic, &scripted}) {
      auto set = suggest({o, n, 0, false}, doc, *b);
      ASSERT_EQ(set.previews.size(), set.suggestions.size());
      std::set<TokenSeq> distinct;
      for (std::size_t k = 0; k < set.previews.size(); ++k) {
        const auto& s = set.suggestions[k].tokens;
        EXPECT_TRUE(distinct.insert(s).second);
        EXPECT_TRUE(std::equal(set.region.human_start.begin(), set.region.human_start.end(),
                               s.begin()));
        auto chosen = apply_choice(set, k);
        EXPECT_EQ(chosen, splice(set.region.prefix, s, set.region.suffix));
        EXPECT_TRUE(std::equal(set.region.prefix.begin(), set.region.prefix.end(), chosen.begin()));
        EXPECT_TRUE(std::equal(set.region.suffix.rbegin(), set.region.suffix.rend(),
                               chosen.rbegin()));
      }
    }
  }
}

}  // namespace
}  // namespace fimedit
