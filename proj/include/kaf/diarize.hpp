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
#include <map>
#include <vector>

#include "kaf/backends.hpp"
#include "kaf/core.hpp"

// Post-processing of raw diarization output into clean, consistently sized
// speaker turns: cluster merging, chunk-based reassignment, and greedy
// segment merging. All three steps are pure functions of their inputs; the
// pipeline applies them per asset in that order.

namespace kaf {

// One diarization cluster. The centroid is renormalized to unit norm at
// construction; merge weighting uses the member count.
struct SpeakerCluster {
  std::int64_t id = 0;
  std::vector<std::int64_t> members;
  Embedding centroid;

  SpeakerCluster(std::int64_t id, std::vector<std::int64_t> members,
                 const Embedding& centroid_direction);

  std::size_t weight() const { return members.size(); }
};

struct RefineConfig {
  double merge_threshold = 0.6;   // merge clusters when similarity > this
  double chunk_len_s = 1.5;       // reassignment chunk length
  double split_threshold = 0.5;   // split when adjacent-chunk similarity < this
  double max_accum_s = 27.0;      // close a merged segment once length exceeds this
  double max_gap_s = 2.0;         // never merge across a silence gap > this

  std::int64_t chunk_len_ms() const;
  std::int64_t max_accum_ms() const;
  std::int64_t max_gap_ms() const;

  void validate() const;  // throws ConfigError
};

// Per-asset refinement counters, aggregated into the run report.
struct RefineReport {
  std::size_t clusters_merged = 0;    // input cluster ids remapped away
  std::size_t segments_split = 0;     // segments whose chunks were reassigned
  std::size_t segments_merged = 0;    // input segments absorbed into a neighbor
  std::size_t backend_failures = 0;   // segments passed through after embed errors
};

struct ClusterMergeResult {
  // Total over input ids; untouched clusters map to themselves.
  std::map<std::int64_t, std::int64_t> relabel;
  // Surviving clusters with recomputed centroids, keyed by canonical id.
  std::vector<SpeakerCluster> clusters;
};

// Agglomerative merge: repeatedly take the most similar pair, merge it when
// similarity exceeds cfg.merge_threshold (strictly), and recompute the
// merged centroid as the member-count-weighted renormalized mean. Ties
// break toward the lexicographically smallest id pair; the canonical id of
// a merged group is its smallest member id.
ClusterMergeResult merge_speaker_clusters(const std::vector<SpeakerCluster>& clusters,
                                          const RefineConfig& cfg);

// Consecutive chunk_len_s cuts of a span; the final chunk may be shorter.
std::vector<TimeSpan> cut_into_chunks(const TimeSpan& span, std::int64_t chunk_ms);

// Splits impure segments: each segment is cut into chunks, and when any
// adjacent chunk pair falls below cfg.split_threshold (strictly) every
// chunk is reassigned to the argmax cluster by centroid similarity, with
// equal-label runs coalesced. Segments whose chunks all agree come back
// unchanged, as do segments whose embedding lookups fail (counted in the
// report). Total covered time is preserved exactly.
std::vector<Segment> reassign_chunks(const std::vector<Segment>& segments,
                                     const std::vector<SpeakerCluster>& clusters,
                                     EmbeddingBackend& embed,
                                     const RefineConfig& cfg,
                                     RefineReport* report = nullptr);

// Greedy left-to-right merge of adjacent same-speaker segments. A neighbor
// is appended iff the gap is <= max_gap_s and the open segment's length is
// still <= max_accum_s; once the length exceeds max_accum_s the segment is
// closed before the next neighbor is considered. Merged spans run from the
// first member's start to the last member's end.
std::vector<Segment> merge_segments(const std::vector<Segment>& segments,
                                    const RefineConfig& cfg,
                                    RefineReport* report = nullptr);

}  // namespace kaf
