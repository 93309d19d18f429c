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

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "json.hpp"

#include "kaf/backends.hpp"
#include "kaf/config.hpp"
#include "kaf/manifest.hpp"
#include "kaf/sequencer.hpp"

// Batch commands behind the CLI. Every command returns its run report as
// JSON and stamps the config hash into each output artifact. Workers share
// nothing but the read-only config and backend handles; per-asset and
// per-record seeds derive from the global seed, so worker count never
// changes a result.

namespace kaf {

// Bounded worker pool over [0, n). fn must confine itself to slot i.
void parallel_for_index(std::size_t n, int workers,
                        const std::function<void(std::size_t)>& fn);

// refine: merge_speaker_clusters -> reassign_chunks -> merge_segments per
// asset. Malformed records are skipped and reported; output records are
// sorted by asset id.
nlohmann::json cmd_refine(const RunConfig& cfg, const std::filesystem::path& in,
                          const std::filesystem::path& out,
                          EmbeddingBackend& embed);

// annotate: language routing, transcription, punctuation, enhancement
// choice per segment.
nlohmann::json cmd_annotate(const RunConfig& cfg, const std::filesystem::path& in,
                            const std::filesystem::path& out,
                            LanguageIdBackend& lang,
                            TranscriptionBackend& transcribe);

struct PretrainOptions {
  std::size_t count = 0;           // 0 = one sequence per asset
  std::optional<TaskKind> only;    // --task filter
  bool stats = false;
};

// build-pretrain: emits task-sequence records into a KAFSEQ1 container at
// `out` plus a human-readable JSON side file at `out`.json.
nlohmann::json cmd_build_pretrain(const RunConfig& cfg,
                                  const std::filesystem::path& in,
                                  const std::filesystem::path& out,
                                  const PretrainOptions& opts = {});

// simulate-stream: drives the scheduler with the hash-mock decoder and
// reports per-chunk emission plus the offline-equivalence checksums.
nlohmann::json cmd_simulate_stream(const RunConfig& cfg,
                                   const std::filesystem::path& tokens_file);

// serve-sim: scripted conversation rounds over deterministic mock
// backends; returns the transcript with each session's round ledger.
nlohmann::json cmd_serve_sim(const RunConfig& cfg,
                             const std::filesystem::path& script);

// stats: summary of a KAFSEQ1 container or a JSONL manifest.
nlohmann::json cmd_stats(const std::filesystem::path& file);

// Token file payload for simulate-stream: a JSON array or {"tokens":[..]}.
std::vector<std::int32_t> load_tokens_file(const std::filesystem::path& path);

}  // namespace kaf
