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
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "kaf/annotate.hpp"
#include "kaf/core.hpp"
#include "kaf/diarize.hpp"

// Line-delimited JSON manifests: one record per asset carrying its
// segments, diarization clusters, annotations, and pipeline stage stamps.

namespace kaf {

// Stage stamps are monotone: a record never claims a stage without every
// earlier one.
inline constexpr std::array<const char*, 3> kPipelineStages = {"diarized", "refined",
                                                               "annotated"};

struct ManifestSegment {
  Segment seg;
  std::optional<EnhancementChoice> enhancement;

  bool operator==(const ManifestSegment&) const = default;
};

struct ClusterEntry {
  std::int64_t id = 0;
  Eigen::VectorXd centroid;

  bool operator==(const ClusterEntry& other) const {
    return id == other.id && centroid == other.centroid;
  }
};

struct ManifestRecord {
  std::string asset_id;
  std::string source;
  double duration_s = 0.0;
  std::vector<ManifestSegment> segments;
  std::vector<ClusterEntry> clusters;
  std::vector<std::string> stages;
  std::string config_hash;

  nlohmann::json to_json() const;
  static ManifestRecord from_json(const nlohmann::json& j);

  bool has_stage(const std::string& stage) const;
  void stamp_stage(const std::string& stage);  // validates monotonicity

  // SpeakerCluster set for refinement: members are the indices of segments
  // labeled with each cluster id. Throws ContractViolation when a segment
  // references a missing cluster.
  std::vector<SpeakerCluster> speaker_clusters() const;

  bool operator==(const ManifestRecord&) const = default;
};

void validate_stages(const std::vector<std::string>& stages);

struct ManifestReadResult {
  std::vector<ManifestRecord> records;
  // (line number, error) for records that failed to parse.
  std::vector<std::pair<std::size_t, std::string>> skipped;
};

// Strict read: any malformed line throws IoError.
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);
// Lenient read: malformed lines are skipped and reported.
ManifestReadResult read_manifest_lenient(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestRecord>& records);

}  // namespace kaf
