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
#include <filesystem>
#include <string>

#include "json.hpp"

#include "kaf/annotate.hpp"
#include "kaf/diarize.hpp"
#include "kaf/orchestrator.hpp"
#include "kaf/sequencer.hpp"
#include "kaf/stream.hpp"

// Run-level configuration. Serializes to one canonical JSON document whose
// fnv1a64 hash is stamped into every output artifact, so identical configs
// are provably identical.

namespace kaf {

struct RunConfig {
  std::uint64_t seed = 0;
  int workers = 1;
  Eigen::Index embedding_dim = 256;
  // Blank ids are vocab-sized: the maximum real id plus one.
  std::int32_t audio_vocab = 4096;
  std::int32_t text_vocab = 256;

  RefineConfig refine;
  AnnotatePolicy annotate;
  StreamConfig stream;
  std::array<double, 7> task_weights = kDefaultTaskWeights;
  SequencerConfig sequencer;
  SessionConfig session;

  std::int32_t audio_blank_id() const { return audio_vocab; }
  std::int32_t text_blank_id() const { return text_vocab; }

  void validate() const;  // throws ConfigError

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);

  // dump of to_json() minus the worker count (execution topology only);
  // nlohmann orders keys, so this is canonical.
  std::string canonical_dump() const;
  // 16 hex chars of fnv1a64(canonical_dump()).
  std::string hash() const;
};

std::string hash_hex(std::uint64_t h);

}  // namespace kaf
