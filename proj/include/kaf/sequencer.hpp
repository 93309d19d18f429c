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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "kaf/core.hpp"
#include "kaf/rng.hpp"

// Training-sequence construction: stream alignment, audio-head delay,
// the seven pre-training task layouts, weighted task sampling, and
// instruction-pool SFT examples.
//
// Layout conventions. A sequence is a list of positions; each position
// carries an optional semantic-audio token slot and an optional text token
// slot plus the segment it came from. Context segments enter as full audio
// (semantic tokens + acoustic features summed by the model) and never
// receive loss; target segments enter as semantic-only or text-only
// streams whose every position receives loss, alignment padding included.
// Dual-head targets occupy one position with both slots filled.

namespace kaf {

inline constexpr std::size_t kDefaultDelayTokens = 6;

// How a position is presented to the model.
enum class InputMode {
  FullAudio,     // a_i: semantic token + acoustic feature vector
  SemanticOnly,  // a_i^d (also dual-head positions, which add a text slot)
  TextOnly,      // t_i
};

// The seven pre-training task layouts.
enum class TaskKind {
  TextOnly,
  AudioOnly,
  ASRMap,
  TTSMap,
  Audio2Semantic,
  Audio2Text,
  Audio2SemanticText,
};

inline constexpr std::array<TaskKind, 7> kAllTaskKinds = {
    TaskKind::TextOnly,       TaskKind::AudioOnly,
    TaskKind::ASRMap,         TaskKind::TTSMap,
    TaskKind::Audio2Semantic, TaskKind::Audio2Text,
    TaskKind::Audio2SemanticText,
};

const char* to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& name);  // throws ConfigError

// A segment's audio and text streams padded to a common length with each
// stream's blank id. Raw lengths are kept so padding can be stripped.
struct AlignedPair {
  TokenStream audio;
  TokenStream text;
  std::size_t raw_audio_len = 0;
  std::size_t raw_text_len = 0;
  std::optional<FeatureHandle> features;
};

// Pads the shorter stream at its end. Feature frame counts, when present,
// must match the raw semantic token count.
AlignedPair align_streams(const TokenStream& audio, const TokenStream& text,
                          std::optional<FeatureHandle> features = std::nullopt);

// Prepends k blank tokens to a semantic stream.
TokenStream apply_delay(const TokenStream& audio, std::size_t k = kDefaultDelayTokens);

struct SequencePosition {
  std::optional<std::int32_t> audio;
  std::optional<std::int32_t> text;
  std::size_t segment = 0;
  InputMode mode = InputMode::TextOnly;

  bool operator==(const SequencePosition&) const = default;
};

struct TaskSequence {
  std::vector<SequencePosition> positions;
  std::vector<bool> loss_audio;
  std::vector<bool> loss_text;
  std::size_t delay_tokens = 0;  // applied to each dual-head audio target

  bool operator==(const TaskSequence&) const = default;
};

const char* to_string(InputMode mode);
InputMode input_mode_from_string(const std::string& name);

// Record layout used in KAFSEQ1 containers and their JSON side files:
// parallel arrays "audio"/"text" (ids or null), "segment", "mode"
// ("a" | "ad" | "t"), plus the two loss masks.
nlohmann::json task_sequence_to_json(const TaskSequence& seq);
TaskSequence task_sequence_from_json(const nlohmann::json& j);

// The interleaving rows default to context on odd segments (1-based) and
// targets on even ones, which needs an even segment count. The footnote
// variants relax the boundaries explicitly.
struct InterleaveOptions {
  bool start_with_target = false;  // first segment is a target (a_1^d)
  bool end_with_context = false;   // last segment may stay context (a_N)
};

struct SequencerConfig {
  std::size_t delay_tokens = kDefaultDelayTokens;
  InterleaveOptions interleave;
};

// Emits the task's exact element order over the given segments with loss
// masks on target positions only. Throws ContractViolation when the task
// needs more segments than provided or the interleaving parity cannot be
// satisfied under the configured options.
TaskSequence build_task_sequence(TaskKind kind,
                                 const std::vector<AlignedPair>& segments,
                                 const SequencerConfig& cfg = {});

// Weighted task sampling. Weights follow kAllTaskKinds order; the default
// 7:1:1:1:1:1:2 normalizes over 14.
inline constexpr std::array<double, 7> kDefaultTaskWeights = {7, 1, 1, 1, 1, 1, 2};

class TaskMixer {
 public:
  TaskMixer(const std::array<double, 7>& weights, std::uint64_t seed);

  TaskKind sample();
  const std::array<double, 7>& weights() const { return weights_; }

 private:
  std::array<double, 7> weights_;
  double total_ = 0.0;
  SeededRng rng_;
};

inline TaskKind sample_task(TaskMixer& mixer) { return mixer.sample(); }

// Pick a kind from one uniform draw in [0,1); used by the mixer and by the
// per-record derived samplers in batch jobs.
TaskKind pick_task(const std::array<double, 7>& weights, double unit);

// --- SFT -------------------------------------------------------------

// One instruction rendered both ways; the builder flips a fair coin
// between them per example.
struct Instruction {
  std::vector<std::int32_t> text_tokens;
  std::vector<std::int32_t> audio_tokens;
};

struct InstructionPool {
  std::string task;
  std::size_t expected_size = 0;  // 200 for asr, 30 otherwise
  std::vector<Instruction> entries;
};

inline constexpr std::size_t kAsrPoolSize = 200;
inline constexpr std::size_t kDefaultPoolSize = 30;

struct SftPools {
  std::map<std::string, InstructionPool> by_task;

  const InstructionPool& pool_for(const std::string& task) const;  // ConfigError
  void validate() const;  // empty or wrongly sized pools -> ConfigError
};

struct SftDatum {
  std::string task;  // "asr", "aqa", ...
  TokenStream prompt_audio;
  std::optional<FeatureHandle> prompt_features;
  std::optional<TokenStream> response_text;
  std::optional<TokenStream> response_audio;
};

struct SftExample {
  TaskSequence sequence;
  std::size_t instruction_index = 0;
  bool instruction_as_audio = false;
  std::string task;
};

// Draws one instruction uniformly from the task's pool and renders it in a
// coin-flipped modality; instruction and prompt positions never carry
// loss, response positions always do. A datum with both response streams
// emits dual-head positions with the configured delay.
SftExample build_sft_example(const SftDatum& datum, const SftPools& pools,
                             SeededRng& rng, const SequencerConfig& cfg = {});

}  // namespace kaf
