// Copyright 2026 The kaf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kaf/core.hpp"

#include <algorithm>
#include <cmath>

namespace kaf {

TimeSpan TimeSpan::from_millis(std::int64_t start_ms, std::int64_t end_ms) {
  if (start_ms < 0)
    throw ContractViolation("TimeSpan: start must be non-negative, got " +
                            std::to_string(start_ms) + " ms");
  if (end_ms <= start_ms)
    throw ContractViolation("TimeSpan: end must exceed start, got [" +
                            std::to_string(start_ms) + ", " +
                            std::to_string(end_ms) + ") ms");
  return TimeSpan(start_ms, end_ms);
}

TimeSpan TimeSpan::from_seconds(double start_s, double end_s) {
  return from_millis(std::llround(start_s * 1000.0), std::llround(end_s * 1000.0));
}

LanguageTag LanguageTag::parse(const std::string& tag) {
  if (tag == "en") return {Kind::en, "en"};
  if (tag == "zh") return {Kind::zh, "zh"};
  return {Kind::other, tag};
}

std::string LanguageTag::str() const {
  switch (kind) {
    case Kind::en: return "en";
    case Kind::zh: return "zh";
    case Kind::other: return raw;
  }
  return raw;
}

Embedding::Embedding(Eigen::VectorXd values) : values_(std::move(values)) {
  if (values_.size() == 0)
    throw ContractViolation("Embedding: empty vector");
  norm_ = values_.norm();
  if (!(norm_ > 0.0) || !std::isfinite(norm_))
    throw ContractViolation("Embedding: zero or non-finite vector rejected");
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim())
    throw ContractViolation("cosine_similarity: dimension mismatch, " +
                            std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()));
  const double sim = a.values().dot(b.values()) / (a.norm() * b.norm());
  return std::clamp(sim, -1.0, 1.0);
}

namespace {

TokenStream make_raw(StreamKind kind, double rate_hz,
                     std::vector<std::int32_t> tokens, std::int32_t blank_id) {
  TokenStream s{kind, rate_hz, std::move(tokens), blank_id};
  if (s.contains_blank())
    throw ContractViolation("TokenStream: blank id " + std::to_string(blank_id) +
                            " present in a raw stream");
  return s;
}

}  // namespace

TokenStream TokenStream::semantic(std::vector<std::int32_t> tokens,
                                  std::int32_t blank_id) {
  return make_raw(StreamKind::semantic_audio, kSemanticTokenRateHz,
                  std::move(tokens), blank_id);
}

TokenStream TokenStream::text(std::vector<std::int32_t> tokens,
                              std::int32_t blank_id) {
  return make_raw(StreamKind::text, 0.0, std::move(tokens), blank_id);
}

bool TokenStream::contains_blank() const {
  return std::find(tokens.begin(), tokens.end(), blank_id) != tokens.end();
}

}  // namespace kaf
