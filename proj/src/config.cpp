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

#include "kaf/config.hpp"

#include <cstdio>
#include <fstream>

#include "kaf/rng.hpp"

namespace kaf {

using nlohmann::json;

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void RunConfig::validate() const {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
  if (audio_vocab < 2 || text_vocab < 2)
    throw ConfigError("vocab sizes must be >= 2");
  refine.validate();
  annotate.validate();
  stream.validate();
  for (double w : task_weights)
    if (!(w > 0.0)) throw ConfigError("task weights must be positive");
  if (!(session.max_listen_s > 0.0))
    throw ConfigError("session.max_listen_s must be > 0");
}

namespace {

json languages_to_json(const std::vector<LanguageTag::Kind>& kinds) {
  json arr = json::array();
  for (auto k : kinds) arr.push_back(LanguageTag{k, ""}.str());
  return arr;
}

std::vector<LanguageTag::Kind> languages_from_json(const json& arr) {
  std::vector<LanguageTag::Kind> kinds;
  for (const auto& v : arr) kinds.push_back(LanguageTag::parse(v.get<std::string>()).kind);
  return kinds;
}

}  // namespace

json RunConfig::to_json() const {
  json weights = json::array();
  for (double w : task_weights) weights.push_back(w);
  return json{
      {"seed", seed},
      {"workers", workers},
      {"embedding_dim", embedding_dim},
      {"audio_vocab", audio_vocab},
      {"text_vocab", text_vocab},
      {"refine",
       {{"merge_threshold", refine.merge_threshold},
        {"chunk_len_s", refine.chunk_len_s},
        {"split_threshold", refine.split_threshold},
        {"max_accum_s", refine.max_accum_s},
        {"max_gap_s", refine.max_gap_s}}},
      {"annotate",
       {{"comma_gap_lo_s", annotate.comma_gap_lo_s},
        {"comma_gap_hi_s", annotate.comma_gap_hi_s},
        {"comma", annotate.comma},
        {"period", annotate.period},
        {"keep_languages", languages_to_json(annotate.keep_languages)},
        {"enhancement_ratio", annotate.enhancement_ratio}}},
      {"stream",
       {{"chunk_tokens", stream.chunk_tokens},
        {"lookahead_n", stream.lookahead_n},
        {"dynamic", stream.dynamic},
        {"dynamic_min_s", stream.dynamic_min_s},
        {"dynamic_max_s", stream.dynamic_max_s},
        {"mel_dim", stream.mel_dim}}},
      {"task_weights", weights},
      {"sequencer",
       {{"delay_tokens", sequencer.delay_tokens},
        {"start_with_target", sequencer.interleave.start_with_target},
        {"end_with_context", sequencer.interleave.end_with_context}}},
      {"session",
       {{"max_listen_s", session.max_listen_s},
        {"history_cap_tokens", session.history_cap_tokens}}},
  };
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig cfg;
  try {
    cfg.seed = j.value("seed", cfg.seed);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.embedding_dim = j.value("embedding_dim", cfg.embedding_dim);
    cfg.audio_vocab = j.value("audio_vocab", cfg.audio_vocab);
    cfg.text_vocab = j.value("text_vocab", cfg.text_vocab);
    if (j.contains("refine")) {
      const auto& r = j.at("refine");
      cfg.refine.merge_threshold = r.value("merge_threshold", cfg.refine.merge_threshold);
      cfg.refine.chunk_len_s = r.value("chunk_len_s", cfg.refine.chunk_len_s);
      cfg.refine.split_threshold = r.value("split_threshold", cfg.refine.split_threshold);
      cfg.refine.max_accum_s = r.value("max_accum_s", cfg.refine.max_accum_s);
      cfg.refine.max_gap_s = r.value("max_gap_s", cfg.refine.max_gap_s);
    }
    if (j.contains("annotate")) {
      const auto& a = j.at("annotate");
      cfg.annotate.comma_gap_lo_s = a.value("comma_gap_lo_s", cfg.annotate.comma_gap_lo_s);
      cfg.annotate.comma_gap_hi_s = a.value("comma_gap_hi_s", cfg.annotate.comma_gap_hi_s);
      cfg.annotate.comma = a.value("comma", cfg.annotate.comma);
      cfg.annotate.period = a.value("period", cfg.annotate.period);
      if (a.contains("keep_languages"))
        cfg.annotate.keep_languages = languages_from_json(a.at("keep_languages"));
      cfg.annotate.enhancement_ratio =
          a.value("enhancement_ratio", cfg.annotate.enhancement_ratio);
    }
    if (j.contains("stream")) {
      const auto& s = j.at("stream");
      cfg.stream.chunk_tokens = s.value("chunk_tokens", cfg.stream.chunk_tokens);
      cfg.stream.lookahead_n = s.value("lookahead_n", cfg.stream.lookahead_n);
      cfg.stream.dynamic = s.value("dynamic", cfg.stream.dynamic);
      cfg.stream.dynamic_min_s = s.value("dynamic_min_s", cfg.stream.dynamic_min_s);
      cfg.stream.dynamic_max_s = s.value("dynamic_max_s", cfg.stream.dynamic_max_s);
      cfg.stream.mel_dim = s.value("mel_dim", cfg.stream.mel_dim);
    }
    if (j.contains("task_weights")) {
      const auto& w = j.at("task_weights");
      if (w.size() != cfg.task_weights.size())
        throw ConfigError("task_weights must list exactly 7 weights");
      for (std::size_t i = 0; i < cfg.task_weights.size(); ++i)
        cfg.task_weights[i] = w.at(i).get<double>();
    }
    if (j.contains("sequencer")) {
      const auto& s = j.at("sequencer");
      cfg.sequencer.delay_tokens = s.value("delay_tokens", cfg.sequencer.delay_tokens);
      cfg.sequencer.interleave.start_with_target =
          s.value("start_with_target", cfg.sequencer.interleave.start_with_target);
      cfg.sequencer.interleave.end_with_context =
          s.value("end_with_context", cfg.sequencer.interleave.end_with_context);
    }
    if (j.contains("session")) {
      const auto& s = j.at("session");
      cfg.session.max_listen_s = s.value("max_listen_s", cfg.session.max_listen_s);
      cfg.session.history_cap_tokens =
          s.value("history_cap_tokens", cfg.session.history_cap_tokens);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  cfg.session.stream = cfg.stream;
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

std::string RunConfig::canonical_dump() const {
  // Worker count is execution topology, not semantics: parallel runs must
  // reproduce serial output byte for byte, embedded hash included.
  nlohmann::json j = to_json();
  j.erase("workers");
  return j.dump();
}

std::string RunConfig::hash() const { return hash_hex(fnv1a64(canonical_dump())); }

}  // namespace kaf
