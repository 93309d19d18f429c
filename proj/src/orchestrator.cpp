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

#include "kaf/orchestrator.hpp"

#include <sstream>

#include "kaf/container.hpp"

namespace kaf {

using nlohmann::json;

const char* to_string(SessionState s) {
  switch (s) {
    case SessionState::Listening: return "listening";
    case SessionState::Committed: return "committed";
    case SessionState::Tokenizing: return "tokenizing";
    case SessionState::Generating: return "generating";
    case SessionState::Streaming: return "streaming";
    case SessionState::Idle: return "idle";
    case SessionState::Failed: return "failed";
  }
  return "unknown";
}

json RoundRecord::to_json() const {
  return json{{"index", index},
              {"input_token_count", input_token_count},
              {"output_text", output_text},
              {"output_audio", output_audio},
              {"chunk_emit_times_s", chunk_emit_times_s},
              {"emitted_frames", emitted_frames},
              {"commit_time_s", commit_time_s},
              {"vad_timeout", vad_timeout},
              {"first_frame_latency_s", first_frame_latency_s}};
}

RoundRecord RoundRecord::from_json(const json& j) {
  RoundRecord r;
  r.index = j.at("index").get<std::size_t>();
  r.input_token_count = j.at("input_token_count").get<std::size_t>();
  r.output_text = j.at("output_text").get<std::vector<std::int32_t>>();
  r.output_audio = j.at("output_audio").get<std::vector<std::int32_t>>();
  r.chunk_emit_times_s = j.at("chunk_emit_times_s").get<std::vector<double>>();
  r.emitted_frames = j.at("emitted_frames").get<std::size_t>();
  r.commit_time_s = j.at("commit_time_s").get<double>();
  r.vad_timeout = j.at("vad_timeout").get<bool>();
  r.first_frame_latency_s = j.at("first_frame_latency_s").get<double>();
  return r;
}

ConversationSession::ConversationSession(std::string id,
                                         std::vector<std::int32_t> system_prompt,
                                         SessionConfig cfg)
    : id_(std::move(id)),
      config_(cfg),
      history_(std::move(system_prompt)),
      prompt_len_(history_.size()) {}

FeedResult ConversationSession::feed_audio(const AudioFrame& frame, VadBackend& vad) {
  if (state_ != SessionState::Listening)
    throw ContractViolation("session " + id_ + ": feed_audio in state " +
                            to_string(state_));
  audio_buffer_.insert(audio_buffer_.end(), frame.bytes.begin(), frame.bytes.end());
  buffered_s_ += frame.duration_s;
  sim_time_s_ += frame.duration_s;

  if (vad.end_of_speech(frame)) {
    state_ = SessionState::Committed;
    commit_time_s_ = sim_time_s_;
    commit_was_timeout_ = false;
    return FeedResult::Committed;
  }
  if (buffered_s_ > config_.max_listen_s) {
    state_ = SessionState::Committed;
    commit_time_s_ = sim_time_s_;
    commit_was_timeout_ = true;
    return FeedResult::CommittedTimeout;
  }
  return FeedResult::Buffered;
}

void ConversationSession::start_listening() {
  if (state_ != SessionState::Idle)
    throw ContractViolation("session " + id_ + ": start_listening in state " +
                            to_string(state_));
  state_ = SessionState::Listening;
}

// run_round needs controlled access to session internals without making
// every field public.
struct SessionAccess {
  static RoundOutcome run(ConversationSession& s, const SessionBackends& b);
  static void restore(ConversationSession& s, SessionState state,
                      std::vector<std::int32_t> history,
                      std::vector<RoundRecord> ledger, double sim_time);
  static ConversationSession rebuild(std::string id, SessionConfig cfg,
                                     SessionState state,
                                     std::vector<std::int32_t> history,
                                     std::size_t prompt_len,
                                     std::vector<RoundRecord> ledger,
                                     double sim_time);
};

RoundOutcome SessionAccess::run(ConversationSession& s, const SessionBackends& b) {
  if (s.state_ != SessionState::Committed)
    throw ContractViolation("session " + s.id_ + ": run_round in state " +
                            to_string(s.state_));
  if (b.tokenizer == nullptr || b.llm == nullptr || b.decoder == nullptr)
    throw ContractViolation("run_round: missing backend");

  const std::size_t history_mark = s.history_.size();
  const std::vector<std::uint8_t> audio = std::move(s.audio_buffer_);
  s.audio_buffer_.clear();
  s.buffered_s_ = 0.0;

  try {
    s.state_ = SessionState::Tokenizing;
    const TokenizedAudio tokenized = b.tokenizer->tokenize(audio);
    const std::vector<std::int32_t>& input = tokenized.semantic.tokens;
    if (input.empty()) {
      s.state_ = SessionState::Listening;
      return {RoundStatus::RejectedEmpty, "no input tokens after commit", nullptr};
    }

    LlmRequest request;
    request.input = s.history_;
    request.new_token_offset = request.input.size();
    request.input.insert(request.input.end(), input.begin(), input.end());

    s.state_ = SessionState::Generating;
    const DualStream output = b.llm->generate(request);

    s.state_ = SessionState::Streaming;
    const TokenStream audio_out{StreamKind::semantic_audio, kSemanticTokenRateHz,
                                output.audio, tokenized.semantic.blank_id};
    CollectSink sink;
    const StreamReport report =
        run_stream(audio_out, s.config_.stream, *b.decoder, sink);
    if (report.aborted) throw IoError(report.error);

    RoundRecord record;
    record.index = s.ledger_.size();
    record.input_token_count = input.size();
    record.output_text = output.text;
    record.output_audio = output.audio;
    record.emitted_frames = report.total_retained_frames;
    record.commit_time_s = s.commit_time_s_;
    record.vad_timeout = s.commit_was_timeout_;
    record.first_frame_latency_s = report.first_frame_latency_s;
    for (const auto& c : report.chunks)
      record.chunk_emit_times_s.push_back(c.emit_time_s);

    s.history_.insert(s.history_.end(), input.begin(), input.end());
    s.history_.insert(s.history_.end(), output.text.begin(), output.text.end());
    s.history_.insert(s.history_.end(), output.audio.begin(), output.audio.end());
    if (s.config_.history_cap_tokens > 0 &&
        s.history_.size() > s.config_.history_cap_tokens)
      throw ContractViolation("session " + s.id_ + ": history cap " +
                              std::to_string(s.config_.history_cap_tokens) +
                              " exceeded");

    s.ledger_.push_back(std::move(record));
    s.state_ = SessionState::Idle;
    return {RoundStatus::Ok, {}, &s.ledger_.back()};
  } catch (const std::exception& e) {
    s.history_.resize(history_mark);  // atomic round: no partial history
    s.state_ = SessionState::Failed;
    s.failure_ = e.what();
    return {RoundStatus::Failed, e.what(), nullptr};
  }
}

void SessionAccess::restore(ConversationSession& s, SessionState state,
                            std::vector<std::int32_t> history,
                            std::vector<RoundRecord> ledger, double sim_time) {
  s.state_ = state;
  s.history_ = std::move(history);
  s.ledger_ = std::move(ledger);
  s.sim_time_s_ = sim_time;
}

ConversationSession SessionAccess::rebuild(std::string id, SessionConfig cfg,
                                           SessionState state,
                                           std::vector<std::int32_t> history,
                                           std::size_t prompt_len,
                                           std::vector<RoundRecord> ledger,
                                           double sim_time) {
  std::vector<std::int32_t> prompt(history.begin(),
                                   history.begin() + static_cast<std::ptrdiff_t>(
                                                         prompt_len));
  ConversationSession s(std::move(id), std::move(prompt), cfg);
  restore(s, state, std::move(history), std::move(ledger), sim_time);
  return s;
}

RoundOutcome run_round(ConversationSession& session, const SessionBackends& backends) {
  return SessionAccess::run(session, backends);
}

namespace {

SessionState state_from_string(const std::string& name) {
  for (SessionState s :
       {SessionState::Listening, SessionState::Committed, SessionState::Tokenizing,
        SessionState::Generating, SessionState::Streaming, SessionState::Idle,
        SessionState::Failed}) {
    if (name == to_string(s)) return s;
  }
  throw IntegrityError("unknown session state: " + name);
}

}  // namespace

void persist_history(const ConversationSession& session, StoreBackend& store) {
  json body{{"id", session.id()},
            {"state", to_string(session.state())},
            {"prompt_len", session.prompt_len()},
            {"history", session.history()},
            {"sim_time_s", session.sim_time_s()}};
  json rounds = json::array();
  for (const auto& r : session.ledger()) rounds.push_back(r.to_json());

  std::ostringstream out(std::ios::binary);
  ContainerWriter writer(out, json{{"kind", "session"}, {"id", session.id()}});
  writer.write(body);
  for (const auto& r : rounds) writer.write(r);
  writer.finish();
  const std::string bytes = out.str();
  store.put(session.id(), std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
}

ConversationSession load_history(const std::string& session_id, StoreBackend& store,
                                 const SessionConfig& cfg) {
  const auto bytes = store.get(session_id);
  if (!bytes) throw IoError("no stored session: " + session_id);
  std::istringstream in(std::string(bytes->begin(), bytes->end()), std::ios::binary);
  ContainerReader reader(in);
  if (reader.header().value("kind", "") != "session")
    throw IntegrityError("stored record is not a session: " + session_id);

  const auto body = reader.next();
  if (!body) throw IntegrityError("stored session missing body: " + session_id);
  std::vector<RoundRecord> ledger;
  while (auto r = reader.next()) ledger.push_back(RoundRecord::from_json(*r));

  return SessionAccess::rebuild(
      body->at("id").get<std::string>(), cfg,
      state_from_string(body->at("state").get<std::string>()),
      body->at("history").get<std::vector<std::int32_t>>(),
      body->at("prompt_len").get<std::size_t>(), std::move(ledger),
      body->at("sim_time_s").get<double>());
}

}  // namespace kaf
