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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "fimedit/tokenization.hpp"

namespace fimedit {

/// Where the generated span sits in the summary. Begin and End are the
/// two-way corner cases; Middle is the three-way infill.
enum class FimMode { kMiddle, kBegin, kEnd };

std::string_view to_string(FimMode mode);
/// Accepts "middle", "begin", "end".
FimMode parse_fim_mode(std::string_view text);

class FormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SplitSummary {
  TokenSeq prefix;
  TokenSeq middle;
  TokenSeq suffix;
  std::string source;

  bool operator==(const SplitSummary&) const = default;
};

struct FimExample {
  FimMode mode = FimMode::kMiddle;
  TokenSeq encoder_input;
  TokenSeq decoder_target;
  std::string id;
  // Cut points into the summary. Two-way modes use a single cut, so i == j.
  std::size_t i = 0;
  std::size_t j = 0;

  bool operator==(const FimExample&) const = default;
};

/// prefix = summary[0, i), middle = summary[i, j), suffix = summary[j, end).
SplitSummary split_summary(TokenSpan summary, std::size_t i, std::size_t j,
                           std::string source = {});

/// [PRE] p [SUF] s [CLS] d  ->  [BOS] m [EOS]
FimExample build_middle_example(const SplitSummary& split, TokenSpan document);
/// [PRE] p [CLS] d  ->  [BOS] s [EOS]
FimExample build_end_example(TokenSpan prefix, TokenSpan suffix, TokenSpan document,
                             std::string id = {});
/// [SUF] s [CLS] d  ->  [BOS] p [EOS]
FimExample build_begin_example(TokenSpan prefix, TokenSpan suffix, TokenSpan document,
                               std::string id = {});

/// prefix ∘ infill ∘ suffix. Throws FormatError if any part holds a sentinel.
TokenSeq splice(TokenSpan prefix, TokenSpan infill, TokenSpan suffix);

struct EncoderParts {
  FimMode mode = FimMode::kMiddle;
  TokenSeq prefix;
  TokenSeq suffix;
  TokenSeq document;

  bool operator==(const EncoderParts&) const = default;
};

/// Recovers the segments of an encoder sequence from its sentinel layout.
/// The mode is determined by the sentinel pattern alone.
EncoderParts parse_encoder_input(TokenSpan encoder_input);
/// Strips [BOS] ... [EOS] and returns the content.
TokenSeq parse_decoder_target(TokenSpan decoder_target);
/// Checks both sequences against their templates and that the parsed mode
/// agrees with `example.mode`.
void validate_example(const FimExample& example);

}  // namespace fimedit
