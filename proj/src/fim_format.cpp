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

#include "fimedit/fim_format.hpp"

#include <algorithm>

namespace fimedit {
namespace {

void append(TokenSeq& out, TokenSpan part) {
  if (contains_sentinel(part)) throw FormatError("template content holds a sentinel id");
  out.insert(out.end(), part.begin(), part.end());
}

void append(TokenSeq& out, Sentinel s) { out.push_back(id_of(s)); }

TokenSeq decoder_for(TokenSpan content) {
  TokenSeq out;
  out.reserve(content.size() + 2);
  append(out, Sentinel::kBos);
  append(out, content);
  append(out, Sentinel::kEos);
  return out;
}

}  // namespace

std::string_view to_string(FimMode mode) {
  switch (mode) {
    case FimMode::kMiddle: return "middle";
    case FimMode::kBegin: return "begin";
    case FimMode::kEnd: return "end";
  }
  return "middle";
}

FimMode parse_fim_mode(std::string_view text) {
  if (text == "middle") return FimMode::kMiddle;
  if (text == "begin") return FimMode::kBegin;
  if (text == "end") return FimMode::kEnd;
  throw FormatError("unknown mode '" + std::string(text) + "'");
}

SplitSummary split_summary(TokenSpan summary, std::size_t i, std::size_t j, std::string source) {
  if (i > j || j > summary.size()) {
    throw std::out_of_range("split indices (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") invalid for summary of length " + std::to_string(summary.size()));
  }
  SplitSummary split;
  split.prefix.assign(summary.begin(), summary.begin() + static_cast<std::ptrdiff_t>(i));
  split.middle.assign(summary.begin() + static_cast<std::ptrdiff_t>(i),
                      summary.begin() + static_cast<std::ptrdiff_t>(j));
  split.suffix.assign(summary.begin() + static_cast<std::ptrdiff_t>(j), summary.end());
  split.source = std::move(source);
  return split;
}

FimExample build_middle_example(const SplitSummary& split, TokenSpan document) {
  FimExample ex;
  ex.mode = FimMode::kMiddle;
  auto& enc = ex.encoder_input;
  enc.reserve(split.prefix.size() + split.suffix.size() + document.size() + 3);
  append(enc, Sentinel::kPre);
  append(enc, split.prefix);
  append(enc, Sentinel::kSuf);
  append(enc, split.suffix);
  append(enc, Sentinel::kCls);
  append(enc, document);
  ex.decoder_target = decoder_for(split.middle);
  ex.id = split.source;
  ex.i = split.prefix.size();
  ex.j = split.prefix.size() + split.middle.size();
  return ex;
}

FimExample build_end_example(TokenSpan prefix, TokenSpan suffix, TokenSpan document,
                             std::string id) {
  FimExample ex;
  ex.mode = FimMode::kEnd;
  auto& enc = ex.encoder_input;
  enc.reserve(prefix.size() + document.size() + 2);
  append(enc, Sentinel::kPre);
  append(enc, prefix);
  append(enc, Sentinel::kCls);
  append(enc, document);
  ex.decoder_target = decoder_for(suffix);
  ex.id = std::move(id);
  ex.i = ex.j = prefix.size();
  return ex;
}

FimExample build_begin_example(TokenSpan prefix, TokenSpan suffix, TokenSpan document,
                               std::string id) {
  FimExample ex;
  ex.mode = FimMode::kBegin;
  auto& enc = ex.encoder_input;
  enc.reserve(suffix.size() + document.size() + 2);
  append(enc, Sentinel::kSuf);
  append(enc, suffix);
  append(enc, Sentinel::kCls);
  append(enc, document);
  ex.decoder_target = decoder_for(prefix);
  ex.id = std::move(id);
  ex.i = ex.j = prefix.size();
  return ex;
}

TokenSeq splice(TokenSpan prefix, TokenSpan infill, TokenSpan suffix) {
  if (contains_sentinel(prefix) || contains_sentinel(infill) || contains_sentinel(suffix)) {
    throw FormatError("sentinel id inside splice argument");
  }
  TokenSeq out;
  out.reserve(prefix.size() + infill.size() + suffix.size());
  append(out, prefix);
  append(out, infill);
  append(out, suffix);
  return out;
}

EncoderParts parse_encoder_input(TokenSpan enc) {
  auto locate = [&](Sentinel s) -> std::vector<std::size_t> {
    std::vector<std::size_t> at;
    for (std::size_t k = 0; k < enc.size(); ++k)
      if (enc[k] == id_of(s)) at.push_back(k);
    return at;
  };
  auto pre = locate(Sentinel::kPre);
  auto suf = locate(Sentinel::kSuf);
  auto cls = locate(Sentinel::kCls);
  if (!locate(Sentinel::kBos).empty() || !locate(Sentinel::kEos).empty()) {
    throw FormatError("encoder input contains decoder sentinels");
  }
  if (cls.size() != 1 || pre.size() > 1 || suf.size() > 1) {
    throw FormatError("encoder input does not match any template");
  }
  auto slice = [&](std::size_t from, std::size_t to) {
    return TokenSeq(enc.begin() + static_cast<std::ptrdiff_t>(from),
                    enc.begin() + static_cast<std::ptrdiff_t>(to));
  };
  EncoderParts parts;
  const std::size_t c = cls[0];
  if (pre.size() == 1 && suf.size() == 1) {
    if (pre[0] != 0 || !(suf[0] < c)) throw FormatError("malformed middle-mode encoder input");
    parts.mode = FimMode::kMiddle;
    parts.prefix = slice(1, suf[0]);
    parts.suffix = slice(suf[0] + 1, c);
  } else if (pre.size() == 1) {
    if (pre[0] != 0) throw FormatError("malformed end-mode encoder input");
    parts.mode = FimMode::kEnd;
    parts.prefix = slice(1, c);
  } else if (suf.size() == 1) {
    if (suf[0] != 0) throw FormatError("malformed begin-mode encoder input");
    parts.mode = FimMode::kBegin;
    parts.suffix = slice(1, c);
  } else {
    throw FormatError("encoder input has neither [PRE] nor [SUF]");
  }
  parts.document = slice(c + 1, enc.size());
  return parts;
}

TokenSeq parse_decoder_target(TokenSpan dec) {
  if (dec.size() < 2 || dec.front() != id_of(Sentinel::kBos) ||
      dec.back() != id_of(Sentinel::kEos)) {
    throw FormatError("decoder target must be [BOS] ... [EOS]");
  }
  TokenSeq content(dec.begin() + 1, dec.end() - 1);
  if (contains_sentinel(content)) throw FormatError("sentinel inside decoder content");
  return content;
}

void validate_example(const FimExample& example) {
  auto parts = parse_encoder_input(example.encoder_input);
  if (parts.mode != example.mode) {
    throw FormatError("encoder layout is " + std::string(to_string(parts.mode)) +
                      " but example is tagged " + std::string(to_string(example.mode)));
  }
  auto content = parse_decoder_target(example.decoder_target);
  if (example.i > example.j) throw FormatError("split indices out of order");
  switch (example.mode) {
    case FimMode::kMiddle:
      if (example.i != parts.prefix.size() || example.j - example.i != content.size())
        throw FormatError("split indices disagree with segment lengths");
      break;
    case FimMode::kEnd:
      if (example.i != example.j || example.i != parts.prefix.size())
        throw FormatError("split indices disagree with segment lengths");
      break;
    case FimMode::kBegin:
      if (example.i != example.j || example.i != content.size())
        throw FormatError("split indices disagree with segment lengths");
      break;
  }
}

}  // namespace fimedit
