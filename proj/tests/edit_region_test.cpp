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

#include <gtest/gtest.h>

#include "fimedit/fim_format.hpp"
#include "oracles.hpp"

namespace fimedit {
namespace {

constexpr TokenId A = 10, B = 11, C = 12, D = 13, E = 14, X = 15;

FillRegion detect(TokenSeq o, TokenSeq n) { return detect_fill_region({std::move(o), std::move(n)}); }

TEST(DetectFillRegion, ReplacementInMiddle) {
  auto r = detect({A, B, C, D, E}, {A, B, X, E});
  EXPECT_EQ(r.prefix, (TokenSeq{A, B}));
  EXPECT_EQ(r.human_start, (TokenSeq{X}));
  EXPECT_EQ(r.suffix, (TokenSeq{E}));
  EXPECT_EQ(r.replaced, (TokenSeq{C, D}));
  EXPECT_EQ(r.mode, FimMode::kMiddle);
}

TEST(DetectFillRegion, DeleteAtStartIsBegin) {
  auto r = detect({A, B, C}, {B, C});
  EXPECT_TRUE(r.prefix.empty());
  EXPECT_TRUE(r.human_start.empty());
  EXPECT_EQ(r.suffix, (TokenSeq{B, C}));
  EXPECT_EQ(r.replaced, (TokenSeq{A}));
  EXPECT_EQ(r.mode, FimMode::kBegin);
}

TEST(DetectFillRegion, DeleteAtEndIsEnd) {
  auto r = detect({A, B, C}, {A});
  EXPECT_EQ(r.prefix, (TokenSeq{A}));
  EXPECT_TRUE(r.human_start.empty());
  EXPECT_TRUE(r.suffix.empty());
  EXPECT_EQ(r.replaced, (TokenSeq{B, C}));
  EXPECT_EQ(r.mode, FimMode::kEnd);
}

TEST(DetectFillRegion, TieBrokenByMaximalPrefix) {
  auto r = detect({A, A, A}, {A, A});
  EXPECT_EQ(r.prefix, (TokenSeq{A, A}));
  EXPECT_TRUE(r.human_start.empty());
  EXPECT_TRUE(r.suffix.empty());
  EXPECT_EQ(r.replaced, (TokenSeq{A}));
  EXPECT_EQ(r.mode, FimMode::kEnd);
}

TEST(DetectFillRegion, HumanStartBeforeSuffixStaysMiddle) {
  // The typed start joins the left context, so Begin is not used.
  auto r = detect({A, B, C}, {X, B, C});
  EXPECT_TRUE(r.prefix.empty());
  EXPECT_EQ(r.human_start, TokenSeq{X});
  EXPECT_EQ(r.mode, FimMode::kMiddle);
  EXPECT_EQ(r.generation_prefix(), TokenSeq{X});
}

TEST(DetectFillRegion, NoEditRejected) {
  EXPECT_THROW(detect({A, B}, {A, B}), NoEditError);
  EXPECT_THROW(detect({}, {}), NoEditError);
}

TEST(DetectFillRegion, RegenerationIsWholeSummary) {
  EditEvent e{{A, B}, {A, B}, 0, true};
  auto r = detect_fill_region(e);
  EXPECT_TRUE(r.prefix.empty() && r.suffix.empty() && r.human_start.empty());
  EXPECT_EQ(r.replaced, (TokenSeq{A, B}));
  EXPECT_EQ(r.mode, FimMode::kMiddle);
  EXPECT_TRUE(r.generation_prefix().empty());
}

TEST(DetectFillRegion, ClearingTheSummaryRegeneratesFromScratch) {
  auto r = detect({A, B}, {});
  EXPECT_EQ(r.mode, FimMode::kMiddle);
  EXPECT_EQ(r.replaced, (TokenSeq{A, B}));
}

TEST(ClassifyRegion, Table) {
  TokenSeq some{A}, none;
  EXPECT_EQ(classify_region(none, none, none), FimMode::kMiddle);
  EXPECT_EQ(classify_region(none, none, some), FimMode::kBegin);
  EXPECT_EQ(classify_region(some, none, none), FimMode::kEnd);
  EXPECT_EQ(classify_region(none, some, none), FimMode::kEnd);
  EXPECT_EQ(classify_region(some, some, some), FimMode::kMiddle);
  EXPECT_EQ(classify_region(none, some, some), FimMode::kMiddle);
}

TEST(ExtractHumanStart, MarkerStripped) {
  Vocabulary v;
  EXPECT_EQ(to_surfaces(extract_human_start("Business practice  ", v), v),
            (std::vector<std::string>{"Business", "practice"}));
  EXPECT_TRUE(extract_human_start("", v).empty());
  EXPECT_EQ(to_surfaces(extract_human_start("word", v), v), std::vector<std::string>{"word"});
}

TEST(DetectFillRegionProperty, MatchesOracleExhaustivelyUpToFive) {
  // Length <= 5 over 3 symbols; the acceptance suite covers length 6.
  auto seqs = oracle::all_sequences(5, 3, A);
  std::size_t pairs = 0;
  for (const auto& o : seqs) {
    for (const auto& n : seqs) {
      if (o == n) continue;
      auto got = detect(o, n);
      auto want = oracle::expected_region(o, n);
      ASSERT_EQ(got, want);
      ASSERT_EQ(splice(got.prefix, got.human_start, got.suffix), n);
      ASSERT_EQ(splice(got.prefix, got.replaced, got.suffix), o);
      ++pairs;
    }
  }
  EXPECT_EQ(pairs, 364u * 364u - 364u);
}

}  // namespace
}  // namespace fimedit
