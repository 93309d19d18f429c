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
#include <string>
#include <vector>

#include "json.hpp"

#include "kaf/backends.hpp"
#include "kaf/core.hpp"
#include "kaf/stream.hpp"

// Conversation-round state machine. Each round walks
// Listening -> Committed -> Tokenizing -> Generating -> Streaming -> Idle;
// Failed is reachable from any active state and rolls the round back.
// Sessions are independent; rounds within a session are strictly serial.

namespace kaf {

enum class SessionState {
  Listening,
  Committed,
  Tokenizing,
  Generating,
  Streaming,
  Idle,
  Failed,
};

const char* to_string(SessionState s);

struct SessionConfig {
  double max_listen_s = 60.0;          // forced commit past this much audio
  std::size_t history_cap_tokens = 0;  // 0 = unbounded
  StreamConfig stream;
};

struct RoundRecord {
  std::size_t index = 0;
  std::size_t input_token_count = 0;
  std::vector<std::int32_t> output_text;
  std::vector<std::int32_t> output_audio;
  std::vector<double> chunk_emit_times_s;
  std::size_t emitted_frames = 0;  // 4 x output_audio.size()
  double commit_time_s = 0.0;
  bool vad_timeout = false;
  double first_frame_latency_s = 0.0;

  nlohmann::json to_json() const;
  static RoundRecord from_json(const nlohmann::json& j);

  bool operator==(const RoundRecord&) const = default;
};

enum class FeedResult { Buffered, Committed, CommittedTimeout };

class ConversationSession {
 public:
  ConversationSession(std::string id, std::vector<std::int32_t> system_prompt,
                      SessionConfig cfg = {});

  const std::string& id() const { return id_; }
  SessionState state() const { return state_; }
  const SessionConfig& config() const { return config_; }
  // Full ordered token history: system prompt, then each round's input and
  // output tokens. Append-only.
  const std::vector<std::int32_t>& history() const { return history_; }
  std::size_t prompt_len() const { return prompt_len_; }
  const std::vector<RoundRecord>& ledger() const { return ledger_; }
  const std::string& failure() const { return failure_; }
  double sim_time_s() const { return sim_time_s_; }

  // Buffers one audio frame; commits the round when the VAD fires or the
  // buffered audio exceeds max_listen_s (flagged as a timeout commit).
  // Throws ContractViolation outside Listening.
  FeedResult feed_audio(const AudioFrame& frame, VadBackend& vad);

  // Idle -> Listening for the next round.
  void start_listening();

 private:
  friend struct SessionAccess;

  std::string id_;
  SessionConfig config_;
  SessionState state_ = SessionState::Listening;
  std::vector<std::int32_t> history_;
  std::size_t prompt_len_ = 0;
  std::vector<RoundRecord> ledger_;
  std::vector<std::uint8_t> audio_buffer_;
  double buffered_s_ = 0.0;
  double sim_time_s_ = 0.0;
  double commit_time_s_ = 0.0;
  bool commit_was_timeout_ = false;
  std::string failure_;
};

struct SessionBackends {
  TokenizerBackend* tokenizer = nullptr;
  LlmBackend* llm = nullptr;
  MelDecoderBackend* decoder = nullptr;
};

enum class RoundStatus { Ok, RejectedEmpty, Failed };

struct RoundOutcome {
  RoundStatus status = RoundStatus::Ok;
  std::string error;
  // Valid only when status == Ok; points into the session ledger.
  const RoundRecord* record = nullptr;
};

// Runs one committed round: tokenize the buffered audio, assemble the
// model input (system prompt ++ history ++ new tokens), generate the dual
// stream, detokenize it through the streaming scheduler, and append input
// then output tokens to the history. Any backend failure rolls the history
// back to the round start and leaves the session Failed. Zero input tokens
// reject the round and return the session to Listening.
RoundOutcome run_round(ConversationSession& session, const SessionBackends& backends);

// History and ledger round-trip through the KAFSEQ1 container placed in
// the store under the session id. load(persist(s)) reproduces them
// exactly; corruption surfaces as IntegrityError.
void persist_history(const ConversationSession& session, StoreBackend& store);
ConversationSession load_history(const std::string& session_id, StoreBackend& store,
                                 const SessionConfig& cfg = {});

}  // namespace kaf
