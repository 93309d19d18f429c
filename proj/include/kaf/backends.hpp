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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kaf/core.hpp"

// Pluggable model-backend contracts. The engine never computes embeddings,
// transcripts, mel frames, or LLM outputs itself; it drives these
// interfaces. Every backend must be deterministic per input within one run
// and tolerate concurrent calls from independent workers.

namespace kaf {

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual Embedding embed(const std::string& asset_id, const TimeSpan& span) = 0;
};

class LanguageIdBackend {
 public:
  virtual ~LanguageIdBackend() = default;
  // nullopt when the detector produced no tag.
  virtual std::optional<LanguageTag> identify(const std::string& asset_id,
                                              const TimeSpan& span) = 0;
};

// One transcribed text unit with its onset, as produced by a
// character-timestamp ASR backend.
struct TimedChar {
  std::string ch;
  double onset_s = 0.0;

  bool operator==(const TimedChar&) const = default;
};

// en transcription arrives as plain text with punctuation already present;
// zh arrives as character/onset pairs for downstream punctuation insertion.
struct TranscriptResult {
  std::optional<std::string> text;
  std::vector<TimedChar> chars;
};

class TranscriptionBackend {
 public:
  virtual ~TranscriptionBackend() = default;
  virtual TranscriptResult transcribe(const std::string& asset_id,
                                      const TimeSpan& span,
                                      LanguageTag::Kind language) = 0;
};

struct TokenizedAudio {
  TokenStream semantic;
  FeatureHandle features;
};

class TokenizerBackend {
 public:
  virtual ~TokenizerBackend() = default;
  virtual TokenizedAudio tokenize(const std::vector<std::uint8_t>& audio_bytes) = 0;
};

// A fully decoded prior chunk handed back as prompt: its semantic tokens
// and its retained mel frames (rows = frames at 50 Hz).
struct PromptChunk {
  std::vector<std::int32_t> tokens;
  Eigen::MatrixXd frames;
};

class MelDecoderBackend {
 public:
  virtual ~MelDecoderBackend() = default;
  // Returns mel frames for the condition tokens; exactly
  // 4 * condition.size() rows.
  virtual Eigen::MatrixXd decode(const std::vector<PromptChunk>& prompt,
                                 std::span<const std::int32_t> condition) = 0;
};

// Parallel text / semantic-audio output of one generation pass.
struct DualStream {
  std::vector<std::int32_t> text;
  std::vector<std::int32_t> audio;
};

// input holds the assembled model input (system prompt ++ history ++ new
// audio tokens); new_token_offset marks where this round's tokens begin.
// Real services consume only the sequence; deterministic mocks may use the
// offset.
struct LlmRequest {
  std::vector<std::int32_t> input;
  std::size_t new_token_offset = 0;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual DualStream generate(const LlmRequest& request) = 0;
};

struct AudioFrame {
  std::vector<std::uint8_t> bytes;
  double duration_s = 0.01;
};

class VadBackend {
 public:
  virtual ~VadBackend() = default;
  virtual bool end_of_speech(const AudioFrame& frame) = 0;
};

class StoreBackend {
 public:
  virtual ~StoreBackend() = default;
  virtual void put(const std::string& key, std::vector<std::uint8_t> value) = 0;
  virtual std::optional<std::vector<std::uint8_t>> get(const std::string& key) = 0;
};

}  // namespace kaf
