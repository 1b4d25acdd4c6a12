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
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fimedit/fim_format.hpp"
#include "fimedit/tokenization.hpp"

namespace fimedit {

struct DatasetRecord {
  std::string id;
  std::string document;
  std::string summary;

  bool operator==(const DatasetRecord&) const = default;
};

struct GenConfig {
  double gamma = 0.5;  // share drawn as begin/end corner cases
  std::uint64_t seed = 0;
  std::size_t min_middle_len = 0;

  void validate() const;
};

struct SplitSpec {
  FimMode mode = FimMode::kMiddle;
  std::size_t i = 0;
  std::size_t j = 0;  // equals i for Begin/End

  bool operator==(const SplitSpec&) const = default;
};

/// Per-record random stream. The engine is std::mt19937_64 seeded from a
/// splitmix64 mix of (seed, stream index); bounded draws use rejection on the
/// raw 64-bit output so sequences do not depend on the standard library's
/// distribution implementations.
class SplitRng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64+splitmix64-stream";

  SplitRng(std::uint64_t seed, std::uint64_t stream);

  /// Uniform in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Uniform in [0, 1) with 53 bits of precision.
  double unit();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Draws a split for a summary of `summary_len` tokens: with probability
/// 1 - gamma a Middle pair (i, j) uniform over 0 <= i <= j <= len (honoring
/// min_middle_len), otherwise Begin or End with equal odds and a uniform cut.
SplitSpec sample_split(std::size_t summary_len, const GenConfig& cfg, SplitRng& rng);

/// Split for a fixed mode such that the generated target (middle, prefix for
/// Begin, suffix for End) holds at least `min_target_len` tokens. The caller
/// must ensure summary_len >= min_target_len.
SplitSpec sample_split_for_mode(std::size_t summary_len, FimMode mode, std::size_t min_target_len,
                                SplitRng& rng);

struct GenerationResult {
  std::vector<FimExample> examples;
  std::vector<std::string> skipped_ids;  // records whose summary tokenized to nothing
};

GenerationResult generate_training_set(std::span<const DatasetRecord> corpus, Vocabulary& vocab,
                                       const GenConfig& cfg);

/// Builds the example for one record given an explicit split.
FimExample build_example(const SplitSpec& spec, TokenSpan summary, TokenSpan document,
                         const std::string& id);

/// JSON-lines corpus: {"id", "document", "summary"} per line.
std::vector<DatasetRecord> read_corpus(const std::filesystem::path& path);
void write_corpus(std::span<const DatasetRecord> corpus, const std::filesystem::path& path);

nlohmann::ordered_json example_to_json(const FimExample& ex, const Vocabulary& vocab);
FimExample example_from_json(const nlohmann::json& j, Vocabulary& vocab);

void write_examples(std::span<const FimExample> examples, const Vocabulary& vocab,
                    const std::filesystem::path& path);
/// Every example is validated against its template on read-back. Malformed
/// lines raise FormatError naming the line.
std::vector<FimExample> read_examples(const std::filesystem::path& path, Vocabulary& vocab);

/// sha256 hex digest over the records' canonical JSON lines.
std::string corpus_checksum(std::span<const DatasetRecord> corpus);

nlohmann::ordered_json make_manifest(const GenConfig& cfg, std::span<const DatasetRecord> corpus,
                                     const GenerationResult& result);

}  // namespace fimedit
