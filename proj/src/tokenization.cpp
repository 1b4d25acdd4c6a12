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

#include "fimedit/tokenization.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>

namespace fimedit {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_terminal_punct(char c) { return c == '.' || c == '!' || c == '?'; }

// Earliest offset of any reserved surface form inside `text`.
std::optional<std::pair<std::size_t, std::string_view>> find_reserved(std::string_view text) {
  std::optional<std::pair<std::size_t, std::string_view>> best;
  for (auto form : kSentinelSurfaces) {
    auto pos = text.find(form);
    if (pos != std::string_view::npos && (!best || pos < best->first)) best = {pos, form};
  }
  return best;
}

}  // namespace

bool contains_sentinel(TokenSpan seq) {
  return std::any_of(seq.begin(), seq.end(), is_sentinel);
}

Vocabulary::Vocabulary() {
  for (std::size_t i = 0; i < kNumSentinels; ++i) {
    surfaces_.emplace_back(kSentinelSurfaces[i]);
    ids_.emplace(surfaces_.back(), static_cast<TokenId>(i));
  }
}

Vocabulary::Vocabulary(const Vocabulary& other) {
  std::shared_lock lock(other.mutex_);
  surfaces_ = other.surfaces_;
  ids_ = other.ids_;
}

Vocabulary& Vocabulary::operator=(const Vocabulary& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_);
  std::shared_lock other_lock(other.mutex_);
  surfaces_ = other.surfaces_;
  ids_ = other.ids_;
  return *this;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw VocabularyError("cannot open vocabulary file " + path.string());
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no < kNumSentinels) {
      if (line != kSentinelSurfaces[line_no]) {
        throw VocabularyError("line " + std::to_string(line_no + 1) + ": expected sentinel " +
                              std::string(kSentinelSurfaces[line_no]));
      }
    } else {
      if (line.empty() || std::any_of(line.begin(), line.end(), is_space)) {
        throw VocabularyError("line " + std::to_string(line_no + 1) + ": invalid surface form");
      }
      if (vocab.ids_.count(line)) {
        throw VocabularyError("line " + std::to_string(line_no + 1) + ": duplicate entry '" +
                              line + "'");
      }
      vocab.ids_.emplace(line, static_cast<TokenId>(vocab.surfaces_.size()));
      vocab.surfaces_.push_back(line);
    }
    ++line_no;
  }
  if (line_no < kNumSentinels) throw VocabularyError("vocabulary file is missing sentinels");
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw VocabularyError("cannot write vocabulary file " + path.string());
  std::shared_lock lock(mutex_);
  for (const auto& s : surfaces_) out << s << '\n';
}

std::optional<TokenId> Vocabulary::find(std::string_view surface) const {
  std::shared_lock lock(mutex_);
  auto it = ids_.find(std::string(surface));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::intern(std::string_view surface) {
  std::string key(surface);
  {
    std::shared_lock lock(mutex_);
    if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  }
  std::scoped_lock lock(mutex_);
  if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  auto id = static_cast<TokenId>(surfaces_.size());
  surfaces_.push_back(key);
  ids_.emplace(std::move(key), id);
  return id;
}

std::string Vocabulary::surface(TokenId id) const {
  std::shared_lock lock(mutex_);
  if (id >= surfaces_.size()) throw VocabularyError("unknown token id " + std::to_string(id));
  return surfaces_[id];
}

std::size_t Vocabulary::size() const {
  std::shared_lock lock(mutex_);
  return surfaces_.size();
}

std::vector<std::string> WhitespaceTokenizer::split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i == start) break;
    std::string_view word = text.substr(start, i - start);
    // Peel terminal punctuation off the end, one character per token.
    std::size_t end = word.size();
    while (end > 1 && is_terminal_punct(word[end - 1])) --end;
    words.emplace_back(word.substr(0, end));
    for (std::size_t k = end; k < word.size(); ++k) words.emplace_back(1, word[k]);
  }
  return words;
}

TokenSeq WhitespaceTokenizer::tokenize(std::string_view text, Vocabulary& vocab) const {
  if (auto reserved = find_reserved(text)) {
    throw TokenizeError("reserved sentinel " + std::string(reserved->second) + " at offset " +
                            std::to_string(reserved->first),
                        reserved->first);
  }
  TokenSeq ids;
  for (const auto& word : split_words(text)) ids.push_back(vocab.intern(word));
  return ids;
}

std::string WhitespaceTokenizer::detokenize(TokenSpan seq, const Vocabulary& vocab) const {
  std::string out;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    if (is_sentinel(seq[k])) {
      throw VocabularyError("sentinel in text position: " +
                            std::string(kSentinelSurfaces[seq[k]]) + " at index " +
                            std::to_string(k));
    }
    if (k) out.push_back(' ');
    out += vocab.surface(seq[k]);
  }
  return out;
}

TokenSeq tokenize(std::string_view text, Vocabulary& vocab) {
  return WhitespaceTokenizer{}.tokenize(text, vocab);
}

std::string detokenize(TokenSpan seq, const Vocabulary& vocab) {
  return WhitespaceTokenizer{}.detokenize(seq, vocab);
}

std::string normalize(std::string_view text) {
  std::string out;
  for (const auto& word : WhitespaceTokenizer::split_words(text)) {
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  return out;
}

std::vector<std::string> to_surfaces(TokenSpan seq, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(seq.size());
  for (auto id : seq) out.push_back(vocab.surface(id));
  return out;
}

TokenSeq from_surfaces(std::span<const std::string> surfaces, Vocabulary& vocab) {
  TokenSeq out;
  out.reserve(surfaces.size());
  for (const auto& s : surfaces) out.push_back(vocab.intern(s));
  return out;
}

}  // namespace fimedit
