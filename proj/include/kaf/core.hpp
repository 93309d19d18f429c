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

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Shared domain types and frame-rate arithmetic. Everything here is
// immutable after construction and safe to share across workers.

namespace kaf {

// Error taxonomy. The CLI maps these onto exit codes:
// IoError -> 1, ConfigError -> 2, ContractViolation -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : Error {
  using Error::Error;
};
// Corrupt persisted data: bad magic, checksum mismatch, truncation.
struct IntegrityError : IoError {
  using IoError::IoError;
};
struct ConfigError : Error {
  using Error::Error;
};
struct ContractViolation : Error {
  using Error::Error;
};

// Frame-rate contract: semantic audio tokens at 12.5 Hz, mel frames at
// 50 Hz, so exactly 4 mel frames (80 ms) per token.
inline constexpr double kSemanticTokenRateHz = 12.5;
inline constexpr double kMelFrameRateHz = 50.0;
inline constexpr std::size_t kMelFramesPerToken = 4;
inline constexpr std::int64_t kMillisPerToken = 80;

inline std::size_t tokens_to_mel_frames(std::size_t n_tokens) {
  return n_tokens * kMelFramesPerToken;
}

inline double tokens_to_seconds(std::size_t n_tokens) {
  return static_cast<double>(n_tokens) / kSemanticTokenRateHz;
}

// Time interval stored as whole milliseconds. All span comparisons in the
// pipeline run on the integer representation; seconds are a view.
class TimeSpan {
 public:
  static TimeSpan from_millis(std::int64_t start_ms, std::int64_t end_ms);
  static TimeSpan from_seconds(double start_s, double end_s);

  std::int64_t start_ms() const { return start_ms_; }
  std::int64_t end_ms() const { return end_ms_; }
  std::int64_t duration_ms() const { return end_ms_ - start_ms_; }

  double start_s() const { return static_cast<double>(start_ms_) / 1000.0; }
  double end_s() const { return static_cast<double>(end_ms_) / 1000.0; }
  double duration_s() const { return static_cast<double>(duration_ms()) / 1000.0; }

  bool operator==(const TimeSpan&) const = default;

 private:
  TimeSpan(std::int64_t start_ms, std::int64_t end_ms)
      : start_ms_(start_ms), end_ms_(end_ms) {}

  std::int64_t start_ms_ = 0;
  std::int64_t end_ms_ = 0;
};

// Detected spoken language. Only en and zh are first-class; everything
// else keeps the raw detector tag for reporting.
struct LanguageTag {
  enum class Kind { en, zh, other };

  Kind kind = Kind::other;
  std::string raw;

  static LanguageTag parse(const std::string& tag);
  std::string str() const;

  bool operator==(const LanguageTag&) const = default;
};

// Fixed-dimension real vector with a cached Euclidean norm. Zero vectors
// are rejected at construction so cosine similarity is always defined.
class Embedding {
 public:
  explicit Embedding(Eigen::VectorXd values);

  Eigen::Index dim() const { return values_.size(); }
  const Eigen::VectorXd& values() const { return values_; }
  double norm() const { return norm_; }

 private:
  Eigen::VectorXd values_;
  double norm_ = 0.0;
};

// dot(a,b) / (|a||b|), clamped into [-1, 1]. Scale invariant.
double cosine_similarity(const Embedding& a, const Embedding& b);

// A speaker-labeled time interval of one audio asset.
struct Segment {
  TimeSpan span = TimeSpan::from_millis(0, 1);
  std::int64_t speaker = 0;
  std::string source;
  std::optional<std::string> transcript;
  std::optional<LanguageTag> language;

  bool operator==(const Segment&) const = default;
};

enum class StreamKind { semantic_audio, text };

// Discrete token sequence. Semantic audio streams always run at 12.5 Hz;
// text streams carry no rate. blank_id is reserved for alignment padding
// and delay and never appears in a raw stream.
struct TokenStream {
  StreamKind kind = StreamKind::text;
  double rate_hz = 0.0;
  std::vector<std::int32_t> tokens;
  std::int32_t blank_id = 0;

  // Validating factories for raw (pre-alignment) streams.
  static TokenStream semantic(std::vector<std::int32_t> tokens, std::int32_t blank_id);
  static TokenStream text(std::vector<std::int32_t> tokens, std::int32_t blank_id);

  std::size_t size() const { return tokens.size(); }
  bool contains_blank() const;

  bool operator==(const TokenStream&) const = default;
};

// Opaque reference to continuous acoustic vectors at 12.5 Hz. The frame
// count must equal the paired raw semantic token count; contents are a
// backend concern.
struct FeatureHandle {
  std::string asset_id;
  std::size_t frame_count = 0;

  bool operator==(const FeatureHandle&) const = default;
};

}  // namespace kaf
