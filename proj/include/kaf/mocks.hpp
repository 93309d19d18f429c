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
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "kaf/backends.hpp"
#include "kaf/core.hpp"
#include "kaf/rng.hpp"

// Deterministic backend implementations for tests and the simulators.
// Hash-backed mocks derive every output from their inputs alone, so any
// run with the same inputs reproduces bit-identically; fixture-backed
// mocks read tables from JSON files.

namespace kaf {

// Key format for fixture tables: "<asset>|<start_ms>|<end_ms>".
std::string span_key(const std::string& asset_id, const TimeSpan& span);

// Mock tokenizations for batch jobs: a stand-in semantic token stream for
// a span (one token per 80 ms, ids hashed from asset and span, never the
// blank) and byte-level text tokens for a transcript.
std::vector<std::int32_t> mock_semantic_tokens(const std::string& asset_id,
                                               const TimeSpan& span,
                                               std::int32_t vocab);
std::vector<std::int32_t> text_tokens_from_utf8(const std::string& text);

// Embedding derived from fnv1a64(asset, span) alone.
class HashEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit HashEmbeddingBackend(Eigen::Index dim, std::uint64_t salt = 0)
      : dim_(dim), salt_(salt) {}

  Embedding embed(const std::string& asset_id, const TimeSpan& span) override;

 private:
  Eigen::Index dim_;
  std::uint64_t salt_;
};

// Reads {"dim": d, "embeddings": {"<key>": [..]}}; a missing key throws
// IoError, which the refinement step treats as a backend failure.
class FixtureEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit FixtureEmbeddingBackend(const std::filesystem::path& file);

  Embedding embed(const std::string& asset_id, const TimeSpan& span) override;

  Eigen::Index dim() const { return dim_; }

 private:
  Eigen::Index dim_ = 0;
  std::unordered_map<std::string, Eigen::VectorXd> table_;
};

// Language and transcription tables from one annotation fixture file:
// {"languages": {"<key>": "en"},
//  "transcripts": {"<key>": {"text": "..."} | {"chars": [{"ch","onset_s"}]}}}
class FixtureAnnotationBackend : public LanguageIdBackend,
                                 public TranscriptionBackend {
 public:
  explicit FixtureAnnotationBackend(const std::filesystem::path& file);

  std::optional<LanguageTag> identify(const std::string& asset_id,
                                      const TimeSpan& span) override;
  TranscriptResult transcribe(const std::string& asset_id, const TimeSpan& span,
                              LanguageTag::Kind language) override;

 private:
  std::unordered_map<std::string, std::string> languages_;
  std::unordered_map<std::string, TranscriptResult> transcripts_;
};

// Hash-driven annotation: language cycles over a fixed tag list, zh
// transcripts get synthetic chars with hash-spread onset gaps.
class HashAnnotationBackend : public LanguageIdBackend,
                              public TranscriptionBackend {
 public:
  explicit HashAnnotationBackend(std::uint64_t salt = 0) : salt_(salt) {}

  std::optional<LanguageTag> identify(const std::string& asset_id,
                                      const TimeSpan& span) override;
  TranscriptResult transcribe(const std::string& asset_id, const TimeSpan& span,
                              LanguageTag::Kind language) override;

 private:
  std::uint64_t salt_;
};

// The reference mock decoder. Every produced frame value is a pure
// function of the token ids visible to its chunk:
//   h      = fnv1a64 over the 4 LE bytes of each visible token id, in order
//            (prompt chunks first, then condition tokens)
//   augmented with the salt: h' = fnv1a64_u64(salt, h)
//   value(t, j) = u64_to_unit_double(splitmix64_scramble(
//                     h' ^ (t+1)*kFrameSalt ^ (j+1)*kDimSalt))
// where t is the absolute 50 Hz frame index and j the mel dimension.
// Offline oracles recompute this formula from the visibility sets implied
// by a block-causal mask extended with look-ahead.
inline constexpr std::uint64_t kFrameSalt = 0xA24BAED4963EE407ULL;
inline constexpr std::uint64_t kDimSalt = 0x9FB21C651E98DF25ULL;

class HashMelDecoder : public MelDecoderBackend {
 public:
  explicit HashMelDecoder(Eigen::Index mel_dim, std::uint64_t salt = 0)
      : mel_dim_(mel_dim), salt_(salt) {}

  Eigen::MatrixXd decode(const std::vector<PromptChunk>& prompt,
                         std::span<const std::int32_t> condition) override;

 private:
  Eigen::Index mel_dim_;
  std::uint64_t salt_;
};

// Decodes audio bytes as little-endian int32 token ids (the simulator's
// wire form). Ids must lie in [0, vocab); blank is vocab.
class ByteTokenizer : public TokenizerBackend {
 public:
  explicit ByteTokenizer(std::int32_t vocab) : vocab_(vocab) {}

  TokenizedAudio tokenize(const std::vector<std::uint8_t>& audio_bytes) override;

  static std::vector<std::uint8_t> encode(const std::vector<std::int32_t>& tokens);

 private:
  std::int32_t vocab_;
};

// Echoes this round's input audio tokens back and emits a fixed text
// sequence.
class EchoLlm : public LlmBackend {
 public:
  explicit EchoLlm(std::vector<std::int32_t> text = {101, 102, 103})
      : text_(std::move(text)) {}

  DualStream generate(const LlmRequest& request) override;

 private:
  std::vector<std::int32_t> text_;
};

// Reports end of speech on the n-th frame of each utterance.
class CountdownVad : public VadBackend {
 public:
  explicit CountdownVad(std::size_t frames_until_end)
      : remaining_(frames_until_end), reset_(frames_until_end) {}

  bool end_of_speech(const AudioFrame& frame) override;
  void rearm() { remaining_ = reset_; }

 private:
  std::size_t remaining_;
  std::size_t reset_;
};

// Never fires; exercises the forced-commit timeout.
class SilentVad : public VadBackend {
 public:
  bool end_of_speech(const AudioFrame&) override { return false; }
};

class MemoryStore : public StoreBackend {
 public:
  void put(const std::string& key, std::vector<std::uint8_t> value) override;
  std::optional<std::vector<std::uint8_t>> get(const std::string& key) override;

 private:
  std::mutex mu_;
  std::map<std::string, std::vector<std::uint8_t>> data_;
};

// Fault-injection backends for the simulator and rollback tests.
class FailingLlm : public LlmBackend {
 public:
  DualStream generate(const LlmRequest&) override {
    throw IoError("injected llm fault");
  }
};

class FailingDecoder : public MelDecoderBackend {
 public:
  Eigen::MatrixXd decode(const std::vector<PromptChunk>&,
                         std::span<const std::int32_t>) override {
    throw IoError("injected decoder fault");
  }
};

class FailingTokenizer : public TokenizerBackend {
 public:
  TokenizedAudio tokenize(const std::vector<std::uint8_t>&) override {
    throw IoError("injected tokenizer fault");
  }
};

}  // namespace kaf
