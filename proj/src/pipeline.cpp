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

#include "kaf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "kaf/container.hpp"
#include "kaf/mocks.hpp"
#include "kaf/orchestrator.hpp"
#include "kaf/stream.hpp"

namespace kaf {

using nlohmann::json;

void parallel_for_index(std::size_t n, int workers,
                        const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t pool_size =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (pool_size <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(pool_size);
  for (std::size_t w = 0; w < pool_size; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

void require_stage(const ManifestRecord& r, const char* stage) {
  if (!r.has_stage(stage))
    throw ContractViolation("asset " + r.asset_id + " lacks stage '" + stage + "'");
}

void check_sorted_disjoint(const std::vector<ManifestSegment>& segments) {
  for (std::size_t i = 1; i < segments.size(); ++i) {
    if (segments[i].seg.span.start_ms() < segments[i - 1].seg.span.end_ms())
      throw ContractViolation("segments unsorted or overlapping at index " +
                              std::to_string(i));
  }
}

json skipped_to_json(const std::vector<std::pair<std::size_t, std::string>>& skipped) {
  json arr = json::array();
  for (const auto& [line, error] : skipped)
    arr.push_back(json{{"line", line}, {"error", error}});
  return arr;
}

}  // namespace

json cmd_refine(const RunConfig& cfg, const std::filesystem::path& in,
                const std::filesystem::path& out, EmbeddingBackend& embed) {
  cfg.validate();
  ManifestReadResult input = read_manifest_lenient(in);
  const std::string config_hash = cfg.hash();

  struct Slot {
    std::optional<ManifestRecord> record;
    RefineReport report;
    std::size_t clusters_merged = 0;
    std::string asset;
    std::string error;
  };
  std::vector<Slot> slots(input.records.size());

  parallel_for_index(input.records.size(), cfg.workers, [&](std::size_t i) {
    Slot& slot = slots[i];
    ManifestRecord record = input.records[i];
    slot.asset = record.asset_id;
    try {
      require_stage(record, "diarized");
      check_sorted_disjoint(record.segments);

      const auto merge = merge_speaker_clusters(record.speaker_clusters(), cfg.refine);
      for (const auto& [old_id, canonical] : merge.relabel)
        if (old_id != canonical) ++slot.clusters_merged;

      std::vector<Segment> segments;
      segments.reserve(record.segments.size());
      for (const auto& ms : record.segments) {
        Segment s = ms.seg;
        s.speaker = merge.relabel.at(s.speaker);
        segments.push_back(std::move(s));
      }

      segments = reassign_chunks(segments, merge.clusters, embed, cfg.refine,
                                 &slot.report);
      segments = merge_segments(segments, cfg.refine, &slot.report);

      record.segments.clear();
      for (auto& s : segments) record.segments.push_back({std::move(s), std::nullopt});
      record.clusters.clear();
      for (const auto& c : merge.clusters)
        record.clusters.push_back({c.id, c.centroid.values()});
      record.stamp_stage("refined");
      record.config_hash = config_hash;
      slot.record = std::move(record);
    } catch (const Error& e) {
      slot.error = e.what();
    }
  });

  std::vector<ManifestRecord> records;
  json discarded = json::array();
  RefineReport total;
  std::size_t clusters_merged = 0;
  for (auto& slot : slots) {
    if (slot.record) {
      records.push_back(std::move(*slot.record));
      total.segments_split += slot.report.segments_split;
      total.segments_merged += slot.report.segments_merged;
      total.backend_failures += slot.report.backend_failures;
      clusters_merged += slot.clusters_merged;
    } else {
      discarded.push_back(json{{"asset", slot.asset}, {"error", slot.error}});
    }
  }
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.asset_id < b.asset_id; });
  write_manifest(out, records);

  return json{{"command", "refine"},
              {"config_hash", config_hash},
              {"assets", records.size()},
              {"clusters_merged", clusters_merged},
              {"segments_split", total.segments_split},
              {"segments_merged", total.segments_merged},
              {"backend_failures", total.backend_failures},
              {"discarded_assets", std::move(discarded)},
              {"skipped_lines", skipped_to_json(input.skipped)}};
}

json cmd_annotate(const RunConfig& cfg, const std::filesystem::path& in,
                  const std::filesystem::path& out, LanguageIdBackend& lang,
                  TranscriptionBackend& transcribe) {
  cfg.validate();
  ManifestReadResult input = read_manifest_lenient(in);
  const std::string config_hash = cfg.hash();

  struct Slot {
    std::optional<ManifestRecord> record;
    std::map<std::string, std::size_t> dropped;
    std::size_t kept = 0, enhanced = 0, original = 0, transcription_failures = 0;
    std::string asset;
    std::string error;
  };
  std::vector<Slot> slots(input.records.size());

  parallel_for_index(input.records.size(), cfg.workers, [&](std::size_t i) {
    Slot& slot = slots[i];
    ManifestRecord record = input.records[i];
    slot.asset = record.asset_id;
    try {
      require_stage(record, "refined");
      std::vector<ManifestSegment> kept;
      for (std::size_t si = 0; si < record.segments.size(); ++si) {
        ManifestSegment ms = record.segments[si];
        const auto tag = lang.identify(record.asset_id, ms.seg.span);
        const RouteDecision route = route_language(tag, cfg.annotate);
        if (!route.transcribe) {
          ++slot.dropped[route.discard_reason];
          continue;
        }
        ms.seg.language =
            LanguageTag{route.language,
                        route.language == LanguageTag::Kind::en ? "en" : "zh"};
        try {
          const TranscriptResult t =
              transcribe.transcribe(record.asset_id, ms.seg.span, route.language);
          if (route.language == LanguageTag::Kind::zh) {
            ms.seg.transcript = insert_punctuation(t.chars, cfg.annotate);
          } else {
            ms.seg.transcript = t.text.value_or("");
          }
        } catch (const Error&) {
          ++slot.transcription_failures;
        }
        auto rng = SeededRng::derive(cfg.seed, "enhance|" + record.asset_id + "|" +
                                                   std::to_string(si));
        const EnhancementChoice choice = select_enhancement(rng, cfg.annotate);
        ms.enhancement = choice;
        if (choice == EnhancementChoice::Enhanced)
          ++slot.enhanced;
        else
          ++slot.original;
        ++slot.kept;
        kept.push_back(std::move(ms));
      }
      record.segments = std::move(kept);
      record.stamp_stage("annotated");
      record.config_hash = config_hash;
      slot.record = std::move(record);
    } catch (const Error& e) {
      slot.error = e.what();
    }
  });

  std::vector<ManifestRecord> records;
  json discarded_assets = json::array();
  std::map<std::string, std::size_t> dropped;
  std::size_t kept = 0, enhanced = 0, original = 0, failures = 0;
  for (auto& slot : slots) {
    if (slot.record) {
      records.push_back(std::move(*slot.record));
      for (const auto& [reason, n] : slot.dropped) dropped[reason] += n;
      kept += slot.kept;
      enhanced += slot.enhanced;
      original += slot.original;
      failures += slot.transcription_failures;
    } else {
      discarded_assets.push_back(json{{"asset", slot.asset}, {"error", slot.error}});
    }
  }
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.asset_id < b.asset_id; });
  write_manifest(out, records);

  return json{{"command", "annotate"},
              {"config_hash", config_hash},
              {"assets", records.size()},
              {"segments_kept", kept},
              {"segments_dropped", json(dropped)},
              {"enhanced", enhanced},
              {"original", original},
              {"transcription_failures", failures},
              {"discarded_assets", std::move(discarded_assets)},
              {"skipped_lines", skipped_to_json(input.skipped)}};
}

namespace {

bool kind_needs_text(TaskKind kind) {
  switch (kind) {
    case TaskKind::AudioOnly:
    case TaskKind::Audio2Semantic:
      return false;
    default:
      return true;
  }
}

bool kind_is_interleaving(TaskKind kind) {
  return kind == TaskKind::Audio2Semantic || kind == TaskKind::Audio2Text ||
         kind == TaskKind::Audio2SemanticText;
}

struct AssetStreams {
  std::string asset_id;
  std::vector<AlignedPair> pairs;
  bool full_transcripts = true;
};

AssetStreams build_asset_streams(const ManifestRecord& record, const RunConfig& cfg) {
  AssetStreams out;
  out.asset_id = record.asset_id;
  for (const auto& ms : record.segments) {
    const auto audio_ids =
        mock_semantic_tokens(record.asset_id, ms.seg.span, cfg.audio_vocab);
    const TokenStream audio =
        TokenStream::semantic(audio_ids, cfg.audio_blank_id());
    FeatureHandle features{record.asset_id, audio_ids.size()};
    if (ms.seg.transcript && !ms.seg.transcript->empty()) {
      const TokenStream text = TokenStream::text(
          text_tokens_from_utf8(*ms.seg.transcript), cfg.text_blank_id());
      out.pairs.push_back(align_streams(audio, text, features));
    } else {
      out.full_transcripts = false;
      TokenStream empty_text =
          TokenStream::text({0}, cfg.text_blank_id());  // placeholder, never used
      out.pairs.push_back(align_streams(audio, empty_text, features));
      out.pairs.back().raw_text_len = 0;
    }
  }
  return out;
}

}  // namespace

json cmd_build_pretrain(const RunConfig& cfg, const std::filesystem::path& in,
                        const std::filesystem::path& out,
                        const PretrainOptions& opts) {
  cfg.validate();
  std::vector<ManifestRecord> records = read_manifest(in);
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.asset_id < b.asset_id; });
  const std::string config_hash = cfg.hash();

  std::vector<AssetStreams> assets(records.size());
  parallel_for_index(records.size(), cfg.workers, [&](std::size_t i) {
    assets[i] = build_asset_streams(records[i], cfg);
  });

  const std::size_t count = opts.count == 0 ? assets.size() : opts.count;

  struct Slot {
    std::optional<json> record;
    TaskKind kind = TaskKind::TextOnly;
    std::string asset;
    std::string skip_reason;
  };
  std::vector<Slot> slots(count);

  parallel_for_index(count, cfg.workers, [&](std::size_t j) {
    Slot& slot = slots[j];
    if (assets.empty()) {
      slot.skip_reason = "empty manifest";
      return;
    }
    const AssetStreams& asset = assets[j % assets.size()];
    slot.asset = asset.asset_id;
    auto rng = SeededRng::derive(cfg.seed, "pretrain|" + std::to_string(j));
    const TaskKind kind =
        opts.only ? *opts.only : pick_task(cfg.task_weights, rng.uniform_double());
    slot.kind = kind;

    if (asset.pairs.empty()) {
      slot.skip_reason = "asset has no segments";
      return;
    }
    if (kind_needs_text(kind) && !asset.full_transcripts) {
      slot.skip_reason = "asset lacks transcripts; only audio-only tasks possible";
      return;
    }
    std::vector<AlignedPair> pairs = asset.pairs;
    if (kind_is_interleaving(kind)) {
      if (pairs.size() < 2) {
        slot.skip_reason = "interleaving needs >= 2 segments";
        return;
      }
      if (pairs.size() % 2 != 0 && !cfg.sequencer.interleave.start_with_target &&
          !cfg.sequencer.interleave.end_with_context)
        pairs.resize(pairs.size() - 1);  // default rows run over an even count
    }
    try {
      const TaskSequence seq = build_task_sequence(kind, pairs, cfg.sequencer);
      slot.record = json{{"index", j},
                         {"kind", to_string(kind)},
                         {"asset", asset.asset_id},
                         {"segments_used", pairs.size()},
                         {"sequence", task_sequence_to_json(seq)}};
    } catch (const Error& e) {
      slot.skip_reason = e.what();
    }
  });

  std::vector<json> out_records;
  json skipped = json::array();
  std::map<std::string, std::size_t> per_kind;
  std::map<std::string, std::map<std::size_t, std::size_t>> loss_histogram;
  std::size_t loss_audio_total = 0, loss_text_total = 0;
  for (auto& slot : slots) {
    if (!slot.record) {
      skipped.push_back(json{{"asset", slot.asset},
                             {"kind", to_string(slot.kind)},
                             {"reason", slot.skip_reason}});
      continue;
    }
    ++per_kind[to_string(slot.kind)];
    if (opts.stats) {
      const auto& seq = (*slot.record)["sequence"];
      std::size_t la = 0, lt = 0;
      for (const auto& b : seq["loss_audio"]) la += b.get<bool>() ? 1 : 0;
      for (const auto& b : seq["loss_text"]) lt += b.get<bool>() ? 1 : 0;
      loss_audio_total += la;
      loss_text_total += lt;
      ++loss_histogram[to_string(slot.kind)][la + lt];
    }
    out_records.push_back(std::move(*slot.record));
  }

  const json header{{"kind", "task_sequences"},
                    {"config_hash", config_hash},
                    {"seed", cfg.seed}};
  write_container_file(out, header, out_records);

  json side{{"magic", std::string(kContainerMagic)},
            {"kind", "task_sequences"},
            {"config_hash", config_hash},
            {"records", out_records}};
  const auto side_path = out.string() + ".json";
  std::ofstream side_out(side_path, std::ios::binary);
  if (!side_out) throw IoError("cannot open for write: " + side_path);
  side_out << side.dump(2) << "\n";
  if (!side_out) throw IoError("write failed: " + side_path);

  json report{{"command", "build-pretrain"},
              {"config_hash", config_hash},
              {"requested", count},
              {"written", out_records.size()},
              {"per_kind", json(per_kind)},
              {"skipped", std::move(skipped)}};
  if (opts.stats) {
    json hist;
    for (const auto& [kind, by_count] : loss_histogram) {
      json h;
      for (const auto& [positions, freq] : by_count)
        h[std::to_string(positions)] = freq;
      hist[kind] = std::move(h);
    }
    report["stats"] = json{{"loss_audio_positions", loss_audio_total},
                           {"loss_text_positions", loss_text_total},
                           {"loss_positions_histogram", std::move(hist)}};
  }
  return report;
}

std::vector<std::int32_t> load_tokens_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tokens file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {};
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("tokens file " + path.string() + " is not valid JSON: " + e.what());
  }
  const json& arr = j.is_object() ? j.at("tokens") : j;
  if (!arr.is_array()) throw IoError("tokens file must hold an array of ids");
  return arr.get<std::vector<std::int32_t>>();
}

namespace {

// Independent recomputation of the mock decoder output from visibility
// ranges alone, for the offline-equivalence checksum.
std::uint64_t offline_checksum(const std::vector<std::int32_t>& tokens,
                               const std::vector<ChunkPlan>& plans,
                               Eigen::Index mel_dim, std::uint64_t salt) {
  std::vector<std::uint64_t> prefix(tokens.size() + 1);
  prefix[0] = kFnvOffset;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    prefix[i + 1] = fnv1a64(&tokens[i], sizeof(tokens[i]), prefix[i]);

  std::uint64_t checksum = kFnvOffset;
  for (const auto& plan : plans) {
    const std::uint64_t h = fnv1a64_u64(salt, prefix[plan.visible_hi]);
    for (std::size_t t = plan.frame_lo; t < plan.frame_hi; ++t) {
      for (Eigen::Index d = 0; d < mel_dim; ++d) {
        const std::uint64_t x = h ^ ((t + 1) * kFrameSalt) ^
                                ((static_cast<std::uint64_t>(d) + 1) * kDimSalt);
        const double v = u64_to_unit_double(splitmix64_scramble(x));
        checksum = fnv1a64(&v, sizeof(v), checksum);
      }
    }
  }
  return checksum;
}

}  // namespace

json cmd_simulate_stream(const RunConfig& cfg,
                         const std::filesystem::path& tokens_file) {
  cfg.validate();
  const std::vector<std::int32_t> ids = load_tokens_file(tokens_file);
  json report{{"command", "simulate-stream"},
              {"config_hash", cfg.hash()},
              {"total_tokens", ids.size()},
              {"chunks", json::array()},
              {"total_retained_frames", 0},
              {"first_frame_latency_s", tokens_to_seconds(cfg.stream.lookahead_n)}};
  if (ids.empty()) return report;

  for (std::int32_t id : ids)
    if (id < 0 || id >= cfg.audio_vocab)
      throw ContractViolation("token id " + std::to_string(id) +
                              " outside audio vocab");

  const TokenStream tokens = TokenStream::semantic(ids, cfg.audio_blank_id());
  std::vector<ChunkPlan> plans;
  if (cfg.stream.dynamic) {
    auto rng = SeededRng::derive(cfg.seed, "dynamic-chunks");
    plans = plan_chunks(tokens.size(), dynamic_chunk_sizes(tokens.size(), rng, cfg.stream),
                        cfg.stream.lookahead_n);
  } else {
    plans = plan_chunks(tokens.size(), cfg.stream);
  }

  HashMelDecoder decoder(cfg.stream.mel_dim, cfg.seed);
  CollectSink sink;
  const StreamReport stream = run_stream(tokens, plans, cfg.stream, decoder, sink);
  if (stream.aborted) throw IoError("simulate-stream: " + stream.error);

  json chunks = json::array();
  for (const auto& c : stream.chunks)
    chunks.push_back(json{{"index", c.index},
                          {"token_lo", c.token_lo},
                          {"token_hi", c.token_hi},
                          {"lookahead", c.lookahead},
                          {"retained_frames", c.retained_frames},
                          {"emit_time_s", c.emit_time_s}});
  const std::uint64_t offline =
      offline_checksum(ids, plans, cfg.stream.mel_dim, cfg.seed);

  report["chunks"] = std::move(chunks);
  report["total_retained_frames"] = stream.total_retained_frames;
  report["stream_checksum"] = hash_hex(stream.frame_checksum);
  report["offline_checksum"] = hash_hex(offline);
  report["match"] = offline == stream.frame_checksum;
  return report;
}

json cmd_serve_sim(const RunConfig& cfg, const std::filesystem::path& script) {
  cfg.validate();
  std::ifstream in(script);
  if (!in) throw IoError("cannot open script: " + script.string());

  SessionConfig session_cfg = cfg.session;
  session_cfg.stream = cfg.stream;

  ByteTokenizer tokenizer(cfg.audio_vocab);
  EchoLlm llm;
  HashMelDecoder decoder(cfg.stream.mel_dim, cfg.seed);
  FailingTokenizer failing_tokenizer;
  FailingLlm failing_llm;
  FailingDecoder failing_decoder;

  std::map<std::string, ConversationSession> sessions;
  json rounds_out = json::array();

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json entry;
    try {
      entry = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError("script line " + std::to_string(lineno) +
                        ": invalid JSON: " + e.what());
    }
    const std::string type = entry.value("type", "");
    if (type == "session") {
      const std::string id = entry.at("id").get<std::string>();
      if (sessions.contains(id))
        throw ConfigError("script line " + std::to_string(lineno) +
                          ": duplicate session '" + id + "'");
      auto prompt = entry.value("system_prompt", std::vector<std::int32_t>{});
      sessions.emplace(id, ConversationSession(id, std::move(prompt), session_cfg));
    } else if (type == "round") {
      const std::string sid = entry.at("session").get<std::string>();
      const auto it = sessions.find(sid);
      if (it == sessions.end())
        throw ConfigError("script line " + std::to_string(lineno) +
                          ": unknown session '" + sid + "'");
      ConversationSession& session = it->second;
      json outcome{{"session", sid}, {"line", lineno}};
      if (session.state() == SessionState::Failed) {
        outcome["status"] = "session_failed";
        rounds_out.push_back(std::move(outcome));
        continue;
      }
      if (session.state() == SessionState::Idle) session.start_listening();

      const auto ids = entry.value("input_tokens", std::vector<std::int32_t>{});
      CountdownVad vad(ids.empty() ? 1 : ids.size());
      if (ids.empty()) {
        session.feed_audio(AudioFrame{{}, 0.0}, vad);
      } else {
        for (std::int32_t id : ids) {
          AudioFrame frame{ByteTokenizer::encode({id}),
                           1.0 / kSemanticTokenRateHz};
          session.feed_audio(frame, vad);
        }
      }

      const std::string fault = entry.value("fault", "");
      SessionBackends backends{
          fault == "tokenizer" ? static_cast<TokenizerBackend*>(&failing_tokenizer)
                               : &tokenizer,
          fault == "llm" ? static_cast<LlmBackend*>(&failing_llm) : &llm,
          fault == "decoder" ? static_cast<MelDecoderBackend*>(&failing_decoder)
                             : &decoder};
      const RoundOutcome result = run_round(session, backends);
      switch (result.status) {
        case RoundStatus::Ok:
          outcome["status"] = "ok";
          outcome["round_index"] = result.record->index;
          break;
        case RoundStatus::RejectedEmpty:
          outcome["status"] = "rejected_empty";
          break;
        case RoundStatus::Failed:
          outcome["status"] = "failed";
          outcome["error"] = result.error;
          break;
      }
      rounds_out.push_back(std::move(outcome));
    } else {
      throw ConfigError("script line " + std::to_string(lineno) +
                        ": unknown entry type '" + type + "'");
    }
  }

  json sessions_out = json::array();
  for (const auto& [id, session] : sessions) {
    json ledger = json::array();
    for (const auto& r : session.ledger()) ledger.push_back(r.to_json());
    sessions_out.push_back(json{{"id", id},
                                {"state", to_string(session.state())},
                                {"history_len", session.history().size()},
                                {"prompt_len", session.prompt_len()},
                                {"failure", session.failure()},
                                {"ledger", std::move(ledger)}});
  }
  return json{{"command", "serve-sim"},
              {"config_hash", cfg.hash()},
              {"rounds", std::move(rounds_out)},
              {"sessions", std::move(sessions_out)}};
}

json cmd_stats(const std::filesystem::path& file) {
  std::ifstream probe(file, std::ios::binary);
  if (!probe) throw IoError("cannot open: " + file.string());
  char magic[7] = {};
  probe.read(magic, 7);
  probe.close();

  if (std::string_view(magic, 7) == kContainerMagic) {
    const ContainerContents contents = read_container_file(file);
    json report{{"command", "stats"},
                {"file_kind", contents.header.value("kind", "unknown")},
                {"config_hash", contents.header.value("config_hash", "")},
                {"records", contents.records.size()}};
    if (contents.header.value("kind", "") == "task_sequences") {
      std::map<std::string, std::size_t> per_kind;
      std::size_t loss_audio = 0, loss_text = 0, positions = 0;
      for (const auto& r : contents.records) {
        ++per_kind[r.value("kind", "unknown")];
        const auto& seq = r.at("sequence");
        positions += seq.at("audio").size();
        for (const auto& b : seq.at("loss_audio")) loss_audio += b.get<bool>() ? 1 : 0;
        for (const auto& b : seq.at("loss_text")) loss_text += b.get<bool>() ? 1 : 0;
      }
      report["per_kind"] = json(per_kind);
      report["positions"] = positions;
      report["loss_audio_positions"] = loss_audio;
      report["loss_text_positions"] = loss_text;
    }
    return report;
  }

  const ManifestReadResult manifest = read_manifest_lenient(file);
  std::size_t segments = 0;
  std::int64_t total_ms = 0;
  std::map<std::string, std::size_t> stages, languages;
  for (const auto& r : manifest.records) {
    segments += r.segments.size();
    for (const auto& ms : r.segments) {
      total_ms += ms.seg.span.duration_ms();
      if (ms.seg.language) ++languages[ms.seg.language->str()];
    }
    for (const auto& s : r.stages) ++stages[s];
  }
  return json{{"command", "stats"},
              {"file_kind", "manifest"},
              {"assets", manifest.records.size()},
              {"segments", segments},
              {"segment_seconds", static_cast<double>(total_ms) / 1000.0},
              {"stages", json(stages)},
              {"languages", json(languages)},
              {"skipped_lines", skipped_to_json(manifest.skipped)}};
}

}  // namespace kaf
