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

#include "fimedit/datagen.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <limits>

namespace fimedit {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Uniform (i, j) over 0 <= i, i + min_len <= j <= len.
std::pair<std::size_t, std::size_t> draw_pair(std::size_t len, std::size_t min_len,
                                              SplitRng& rng) {
  const std::uint64_t span = len - min_len + 1;  // choices for i
  const std::uint64_t total = span * (span + 1) / 2;
  std::uint64_t r = rng.below(total);
  for (std::size_t i = 0; i < span; ++i) {
    const std::uint64_t row = span - i;  // j ranges over [i + min_len, len]
    if (r < row) return {i, i + min_len + r};
    r -= row;
  }
  return {0, len};  // unreachable
}

std::string hex(std::span<const unsigned char> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

ordered_json record_to_json(const DatasetRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["document"] = r.document;
  j["summary"] = r.summary;
  return j;
}

}  // namespace

void GenConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in [0, 1], got " + std::to_string(gamma));
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SplitRng::SplitRng(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

std::uint64_t SplitRng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("SplitRng::below(0)");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double SplitRng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

SplitSpec sample_split(std::size_t summary_len, const GenConfig& cfg, SplitRng& rng) {
  if (summary_len == 0) throw std::invalid_argument("sample_split needs a non-empty summary");
  SplitSpec spec;
  if (rng.unit() < cfg.gamma) {
    spec.mode = rng.below(2) == 0 ? FimMode::kBegin : FimMode::kEnd;
    spec.i = spec.j = rng.below(summary_len + 1);
    return spec;
  }
  const std::size_t min_len = std::min(cfg.min_middle_len, summary_len);
  auto [i, j] = draw_pair(summary_len, min_len, rng);
  spec.mode = FimMode::kMiddle;
  spec.i = i;
  spec.j = j;
  return spec;
}

SplitSpec sample_split_for_mode(std::size_t summary_len, FimMode mode, std::size_t min_target_len,
                                SplitRng& rng) {
  if (summary_len < min_target_len) {
    throw std::invalid_argument("summary shorter than the minimum target length");
  }
  SplitSpec spec;
  spec.mode = mode;
  switch (mode) {
    case FimMode::kMiddle: {
      auto [i, j] = draw_pair(summary_len, min_target_len, rng);
      spec.i = i;
      spec.j = j;
      break;
    }
    case FimMode::kBegin:
      spec.i = spec.j = min_target_len + rng.below(summary_len - min_target_len + 1);
      break;
    case FimMode::kEnd:
      spec.i = spec.j = rng.below(summary_len - min_target_len + 1);
      break;
  }
  return spec;
}

FimExample build_example(const SplitSpec& spec, TokenSpan summary, TokenSpan document,
                         const std::string& id) {
  switch (spec.mode) {
    case FimMode::kMiddle:
      return build_middle_example(split_summary(summary, spec.i, spec.j, id), document);
    case FimMode::kBegin:
    case FimMode::kEnd: {
      if (spec.i > summary.size()) throw std::out_of_range("cut index beyond summary");
      auto prefix = summary.first(spec.i);
      auto suffix = summary.subspan(spec.i);
      return spec.mode == FimMode::kBegin ? build_begin_example(prefix, suffix, document, id)
                                          : build_end_example(prefix, suffix, document, id);
    }
  }
  throw std::logic_error("unhandled mode");
}

GenerationResult generate_training_set(std::span<const DatasetRecord> corpus, Vocabulary& vocab,
                                       const GenConfig& cfg) {
  cfg.validate();
  if (corpus.empty()) throw std::invalid_argument("corpus is empty");
  GenerationResult result;
  for (std::size_t r = 0; r < corpus.size(); ++r) {
    const auto& rec = corpus[r];
    auto summary = tokenize(rec.summary, vocab);
    if (summary.empty()) {
      result.skipped_ids.push_back(rec.id);
      continue;
    }
    auto document = tokenize(rec.document, vocab);
    SplitRng rng(cfg.seed, r);
    auto spec = sample_split(summary.size(), cfg, rng);
    result.examples.push_back(build_example(spec, summary, document, rec.id));
  }
  return result;
}

std::vector<DatasetRecord> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus " + path.string());
  std::vector<DatasetRecord> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      corpus.push_back({j.at("id").get<std::string>(), j.at("document").get<std::string>(),
                        j.at("summary").get<std::string>()});
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return corpus;
}

void write_corpus(std::span<const DatasetRecord> corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : corpus) out << record_to_json(r).dump() << '\n';
}

ordered_json example_to_json(const FimExample& ex, const Vocabulary& vocab) {
  ordered_json j;
  j["id"] = ex.id;
  j["mode"] = to_string(ex.mode);
  j["encoder_tokens"] = to_surfaces(ex.encoder_input, vocab);
  j["decoder_tokens"] = to_surfaces(ex.decoder_target, vocab);
  j["i"] = ex.i;
  j["j"] = ex.j;
  return j;
}

FimExample example_from_json(const json& j, Vocabulary& vocab) {
  FimExample ex;
  ex.id = j.at("id").get<std::string>();
  ex.mode = parse_fim_mode(j.at("mode").get<std::string>());
  auto enc = j.at("encoder_tokens").get<std::vector<std::string>>();
  auto dec = j.at("decoder_tokens").get<std::vector<std::string>>();
  ex.encoder_input = from_surfaces(enc, vocab);
  ex.decoder_target = from_surfaces(dec, vocab);
  ex.i = j.at("i").get<std::size_t>();
  ex.j = j.at("j").get<std::size_t>();
  return ex;
}

void write_examples(std::span<const FimExample> examples, const Vocabulary& vocab,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& ex : examples) out << example_to_json(ex, vocab).dump() << '\n';
}

std::vector<FimExample> read_examples(const std::filesystem::path& path, Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<FimExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    try {
      auto ex = example_from_json(json::parse(line), vocab);
      validate_example(ex);
      out.push_back(std::move(ex));
    } catch (const std::exception& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string corpus_checksum(std::span<const DatasetRecord> corpus) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 unavailable");
  }
  for (const auto& r : corpus) {
    auto line = record_to_json(r).dump() + "\n";
    EVP_DigestUpdate(ctx.get(), line.data(), line.size());
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  return "sha256:" + hex(std::span(digest.data(), len));
}

ordered_json make_manifest(const GenConfig& cfg, std::span<const DatasetRecord> corpus,
                           const GenerationResult& result) {
  ordered_json m;
  m["seed"] = cfg.seed;
  m["gamma"] = cfg.gamma;
  m["min_middle_len"] = cfg.min_middle_len;
  m["rng"] = SplitRng::kAlgorithm;
  m["corpus_checksum"] = corpus_checksum(corpus);
  m["corpus_records"] = corpus.size();
  m["example_count"] = result.examples.size();
  m["skipped_ids"] = result.skipped_ids;
  return m;
}

}  // namespace fimedit
