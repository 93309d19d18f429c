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

#include "kaf/sequencer.hpp"

#include <algorithm>

namespace kaf {

const char* to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::TextOnly: return "text_only";
    case TaskKind::AudioOnly: return "audio_only";
    case TaskKind::ASRMap: return "asr";
    case TaskKind::TTSMap: return "tts";
    case TaskKind::Audio2Semantic: return "audio_to_semantic";
    case TaskKind::Audio2Text: return "audio_to_text";
    case TaskKind::Audio2SemanticText: return "audio_to_semantic_text";
  }
  return "unknown";
}

TaskKind task_kind_from_string(const std::string& name) {
  for (TaskKind k : kAllTaskKinds) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown task kind: " + name);
}

AlignedPair align_streams(const TokenStream& audio, const TokenStream& text,
                          std::optional<FeatureHandle> features) {
  if (audio.kind != StreamKind::semantic_audio)
    throw ContractViolation("align_streams: first stream must be semantic audio");
  if (text.kind != StreamKind::text)
    throw ContractViolation("align_streams: second stream must be text");
  if (audio.tokens.empty() || text.tokens.empty())
    throw ContractViolation("align_streams: streams must be non-empty");
  if (features && features->frame_count != audio.tokens.size())
    throw ContractViolation("align_streams: feature frame count " +
                            std::to_string(features->frame_count) +
                            " != semantic token count " +
                            std::to_string(audio.tokens.size()));

  AlignedPair pair{audio, text, audio.size(), text.size(), std::move(features)};
  const std::size_t len = std::max(pair.raw_audio_len, pair.raw_text_len);
  pair.audio.tokens.resize(len, pair.audio.blank_id);
  pair.text.tokens.resize(len, pair.text.blank_id);
  return pair;
}

TokenStream apply_delay(const TokenStream& audio, std::size_t k) {
  if (audio.kind != StreamKind::semantic_audio)
    throw ContractViolation("apply_delay: expects a semantic audio stream");
  TokenStream out = audio;
  out.tokens.assign(k, audio.blank_id);
  out.tokens.insert(out.tokens.end(), audio.tokens.begin(), audio.tokens.end());
  return out;
}

namespace {

void emit_full_audio(TaskSequence& seq, const AlignedPair& pair, std::size_t seg) {
  for (std::int32_t id : pair.audio.tokens) {
    seq.positions.push_back({id, std::nullopt, seg, InputMode::FullAudio});
    seq.loss_audio.push_back(false);
    seq.loss_text.push_back(false);
  }
}

void emit_semantic(TaskSequence& seq, const AlignedPair& pair, std::size_t seg,
                   bool loss) {
  for (std::int32_t id : pair.audio.tokens) {
    seq.positions.push_back({id, std::nullopt, seg, InputMode::SemanticOnly});
    seq.loss_audio.push_back(loss);
    seq.loss_text.push_back(false);
  }
}

void emit_text(TaskSequence& seq, const AlignedPair& pair, std::size_t seg,
               bool loss) {
  for (std::int32_t id : pair.text.tokens) {
    seq.positions.push_back({std::nullopt, id, seg, InputMode::TextOnly});
    seq.loss_audio.push_back(false);
    seq.loss_text.push_back(loss);
  }
}

// Dual-head target: one position carries both the delayed semantic token
// and the text token; both heads receive loss across the whole element.
void emit_dual(TaskSequence& seq, const AlignedPair& pair, std::size_t seg,
               std::size_t delay) {
  const TokenStream delayed = apply_delay(pair.audio, delay);
  std::vector<std::int32_t> text = pair.text.tokens;
  text.resize(text.size() + delay, pair.text.blank_id);
  for (std::size_t p = 0; p < delayed.tokens.size(); ++p) {
    seq.positions.push_back(
        {delayed.tokens[p], text[p], seg, InputMode::SemanticOnly});
    seq.loss_audio.push_back(true);
    seq.loss_text.push_back(true);
  }
}

// 1-based even segments are targets unless start_with_target flips parity.
bool is_target_slot(std::size_t index0, const InterleaveOptions& opt) {
  const bool even = ((index0 + 1) % 2) == 0;
  return even != opt.start_with_target;
}

void check_interleave(std::size_t n, const InterleaveOptions& opt) {
  if (n < 2)
    throw ContractViolation("interleaving tasks need at least 2 segments, got " +
                            std::to_string(n));
  if (!is_target_slot(n - 1, opt) && !opt.end_with_context)
    throw ContractViolation(
        "interleaving over " + std::to_string(n) +
        " segments leaves the last segment as context; use an even count, "
        "start_with_target, or end_with_context");
}

}  // namespace

TaskSequence build_task_sequence(TaskKind kind,
                                 const std::vector<AlignedPair>& segments,
                                 const SequencerConfig& cfg) {
  if (segments.empty())
    throw ContractViolation("build_task_sequence: no segments");

  TaskSequence seq;
  switch (kind) {
    case TaskKind::TextOnly:
      for (std::size_t i = 0; i < segments.size(); ++i)
        emit_text(seq, segments[i], i, true);
      break;
    case TaskKind::AudioOnly:
      for (std::size_t i = 0; i < segments.size(); ++i)
        emit_semantic(seq, segments[i], i, true);
      break;
    case TaskKind::ASRMap:
      for (std::size_t i = 0; i < segments.size(); ++i) {
        emit_full_audio(seq, segments[i], i);
        emit_text(seq, segments[i], i, true);
      }
      break;
    case TaskKind::TTSMap:
      for (std::size_t i = 0; i < segments.size(); ++i) {
        emit_text(seq, segments[i], i, false);
        emit_semantic(seq, segments[i], i, true);
      }
      break;
    case TaskKind::Audio2Semantic:
      check_interleave(segments.size(), cfg.interleave);
      for (std::size_t i = 0; i < segments.size(); ++i) {
        if (is_target_slot(i, cfg.interleave))
          emit_semantic(seq, segments[i], i, true);
        else
          emit_full_audio(seq, segments[i], i);
      }
      break;
    case TaskKind::Audio2Text:
      check_interleave(segments.size(), cfg.interleave);
      for (std::size_t i = 0; i < segments.size(); ++i) {
        if (is_target_slot(i, cfg.interleave))
          emit_text(seq, segments[i], i, true);
        else
          emit_full_audio(seq, segments[i], i);
      }
      break;
    case TaskKind::Audio2SemanticText:
      check_interleave(segments.size(), cfg.interleave);
      seq.delay_tokens = cfg.delay_tokens;
      for (std::size_t i = 0; i < segments.size(); ++i) {
        if (is_target_slot(i, cfg.interleave))
          emit_dual(seq, segments[i], i, cfg.delay_tokens);
        else
          emit_full_audio(seq, segments[i], i);
      }
      break;
  }
  return seq;
}

const char* to_string(InputMode mode) {
  switch (mode) {
    case InputMode::FullAudio: return "a";
    case InputMode::SemanticOnly: return "ad";
    case InputMode::TextOnly: return "t";
  }
  return "?";
}

InputMode input_mode_from_string(const std::string& name) {
  if (name == "a") return InputMode::FullAudio;
  if (name == "ad") return InputMode::SemanticOnly;
  if (name == "t") return InputMode::TextOnly;
  throw IoError("unknown input mode: " + name);
}

nlohmann::json task_sequence_to_json(const TaskSequence& seq) {
  using nlohmann::json;
  json audio = json::array(), text = json::array(), segment = json::array(),
       mode = json::array();
  for (const auto& p : seq.positions) {
    audio.push_back(p.audio ? json(*p.audio) : json(nullptr));
    text.push_back(p.text ? json(*p.text) : json(nullptr));
    segment.push_back(p.segment);
    mode.push_back(to_string(p.mode));
  }
  return json{{"audio", std::move(audio)},
              {"text", std::move(text)},
              {"segment", std::move(segment)},
              {"mode", std::move(mode)},
              {"loss_audio", seq.loss_audio},
              {"loss_text", seq.loss_text},
              {"delay_tokens", seq.delay_tokens}};
}

TaskSequence task_sequence_from_json(const nlohmann::json& j) {
  TaskSequence seq;
  try {
    const auto& audio = j.at("audio");
    const auto& text = j.at("text");
    const auto& segment = j.at("segment");
    const auto& mode = j.at("mode");
    if (audio.size() != text.size() || audio.size() != segment.size() ||
        audio.size() != mode.size())
      throw IoError("task sequence arrays disagree in length");
    for (std::size_t i = 0; i < audio.size(); ++i) {
      SequencePosition p;
      if (!audio.at(i).is_null()) p.audio = audio.at(i).get<std::int32_t>();
      if (!text.at(i).is_null()) p.text = text.at(i).get<std::int32_t>();
      p.segment = segment.at(i).get<std::size_t>();
      p.mode = input_mode_from_string(mode.at(i).get<std::string>());
      seq.positions.push_back(p);
    }
    seq.loss_audio = j.at("loss_audio").get<std::vector<bool>>();
    seq.loss_text = j.at("loss_text").get<std::vector<bool>>();
    seq.delay_tokens = j.value("delay_tokens", std::size_t{0});
    if (seq.loss_audio.size() != seq.positions.size() ||
        seq.loss_text.size() != seq.positions.size())
      throw IoError("task sequence loss masks disagree with positions");
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed task sequence record: ") + e.what());
  }
  return seq;
}

TaskMixer::TaskMixer(const std::array<double, 7>& weights, std::uint64_t seed)
    : weights_(weights), rng_(seed) {
  for (double w : weights_) {
    if (!(w > 0.0)) throw ConfigError("task weights must be positive");
    total_ += w;
  }
}

TaskKind pick_task(const std::array<double, 7>& weights, double unit) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double x = unit * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (x < acc) return kAllTaskKinds[i];
  }
  return kAllTaskKinds.back();
}

TaskKind TaskMixer::sample() { return pick_task(weights_, rng_.uniform_double()); }

const InstructionPool& SftPools::pool_for(const std::string& task) const {
  auto it = by_task.find(task);
  if (it == by_task.end())
    throw ConfigError("sft: no instruction pool for task '" + task + "'");
  return it->second;
}

void SftPools::validate() const {
  for (const auto& [task, pool] : by_task) {
    if (pool.entries.empty())
      throw ConfigError("sft: empty instruction pool for task '" + task + "'");
    const std::size_t expected =
        pool.expected_size ? pool.expected_size
                           : (task == "asr" ? kAsrPoolSize : kDefaultPoolSize);
    if (pool.entries.size() != expected)
      throw ConfigError("sft: pool '" + task + "' has " +
                        std::to_string(pool.entries.size()) + " instructions, expected " +
                        std::to_string(expected));
    for (const auto& e : pool.entries) {
      if (e.text_tokens.empty() || e.audio_tokens.empty())
        throw ConfigError("sft: pool '" + task +
                          "' has an instruction missing a text or audio rendering");
    }
  }
}

SftExample build_sft_example(const SftDatum& datum, const SftPools& pools,
                             SeededRng& rng, const SequencerConfig& cfg) {
  const InstructionPool& pool = pools.pool_for(datum.task);
  if (pool.entries.empty())
    throw ConfigError("sft: empty instruction pool for task '" + datum.task + "'");
  if (!datum.response_text && !datum.response_audio)
    throw ContractViolation("sft: datum for task '" + datum.task +
                            "' carries no response stream");

  const std::size_t index = rng.uniform_int(0, pool.entries.size() - 1);
  const bool as_audio = rng.coin();
  const Instruction& ins = pool.entries[index];

  SftExample ex;
  ex.instruction_index = index;
  ex.instruction_as_audio = as_audio;
  ex.task = datum.task;
  TaskSequence& seq = ex.sequence;

  // Segment 0: the instruction, never with loss.
  const auto& ins_tokens = as_audio ? ins.audio_tokens : ins.text_tokens;
  for (std::int32_t id : ins_tokens) {
    if (as_audio)
      seq.positions.push_back({id, std::nullopt, 0, InputMode::FullAudio});
    else
      seq.positions.push_back({std::nullopt, id, 0, InputMode::TextOnly});
    seq.loss_audio.push_back(false);
    seq.loss_text.push_back(false);
  }

  // Segment 1: the user audio prompt, never with loss.
  for (std::int32_t id : datum.prompt_audio.tokens) {
    seq.positions.push_back({id, std::nullopt, 1, InputMode::FullAudio});
    seq.loss_audio.push_back(false);
    seq.loss_text.push_back(false);
  }

  // Segment 2: the response, loss on every emitted stream.
  if (datum.response_text && datum.response_audio) {
    const AlignedPair pair =
        align_streams(*datum.response_audio, *datum.response_text);
    seq.delay_tokens = cfg.delay_tokens;
    emit_dual(seq, pair, 2, cfg.delay_tokens);
  } else if (datum.response_text) {
    for (std::int32_t id : datum.response_text->tokens) {
      seq.positions.push_back({std::nullopt, id, 2, InputMode::TextOnly});
      seq.loss_audio.push_back(false);
      seq.loss_text.push_back(true);
    }
  } else {
    for (std::int32_t id : datum.response_audio->tokens) {
      seq.positions.push_back({id, std::nullopt, 2, InputMode::SemanticOnly});
      seq.loss_audio.push_back(true);
      seq.loss_text.push_back(false);
    }
  }
  return ex;
}

}  // namespace kaf
