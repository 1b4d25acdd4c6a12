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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fimedit {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;
using TokenSpan = std::span<const TokenId>;

/// Reserved template markers. The numeric value is the token id; sentinels
/// always occupy ids 0..4 of every vocabulary, in this order.
enum class Sentinel : TokenId { kPre = 0, kSuf = 1, kCls = 2, kBos = 3, kEos = 4 };

inline constexpr std::size_t kNumSentinels = 5;
inline constexpr std::array<std::string_view, kNumSentinels> kSentinelSurfaces = {
    "[PRE]", "[SUF]", "[CLS]", "[BOS]", "[EOS]"};

constexpr TokenId id_of(Sentinel s) { return static_cast<TokenId>(s); }
constexpr bool is_sentinel(TokenId id) { return id < kNumSentinels; }
bool contains_sentinel(TokenSpan seq);

/// Raised when input text carries a reserved sentinel surface form.
class TokenizeError : public std::invalid_argument {
 public:
  TokenizeError(const std::string& what, std::size_t offset)
      : std::invalid_argument(what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class VocabularyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bidirectional surface-string <-> id table. Open vocabulary: `intern`
/// grows it. All members are internally synchronized, so one instance can be
/// shared by concurrent sessions.
class Vocabulary {
 public:
  Vocabulary();
  Vocabulary(const Vocabulary& other);
  Vocabulary& operator=(const Vocabulary& other);

  /// Line-oriented file: one surface form per line, line number = id. The
  /// first five lines must be the sentinels in canonical order.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::optional<TokenId> find(std::string_view surface) const;
  TokenId intern(std::string_view surface);
  std::string surface(TokenId id) const;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::vector<std::string> surfaces_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// Text <-> token mapping. Implementations must never emit sentinel ids for
/// user text.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual TokenSeq tokenize(std::string_view text, Vocabulary& vocab) const = 0;
  virtual std::string detokenize(TokenSpan seq, const Vocabulary& vocab) const = 0;
};

/// Whitespace splitting, with terminal punctuation (. ! ?) detached from the
/// end of a word into separate tokens.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  TokenSeq tokenize(std::string_view text, Vocabulary& vocab) const override;
  std::string detokenize(TokenSpan seq, const Vocabulary& vocab) const override;

  /// Surface words in order; no vocabulary access.
  static std::vector<std::string> split_words(std::string_view text);
};

TokenSeq tokenize(std::string_view text, Vocabulary& vocab);
std::string detokenize(TokenSpan seq, const Vocabulary& vocab);

/// The canonical form the default tokenizer round-trips to: whitespace runs
/// collapsed to single spaces, trimmed, terminal punctuation space-separated.
std::string normalize(std::string_view text);

/// Surface strings for a sequence; sentinels are rendered as "[PRE]" etc.
std::vector<std::string> to_surfaces(TokenSpan seq, const Vocabulary& vocab);
/// Inverse of `to_surfaces`: sentinel surfaces map to sentinel ids, other
/// strings are interned.
TokenSeq from_surfaces(std::span<const std::string> surfaces, Vocabulary& vocab);

}  // namespace fimedit
