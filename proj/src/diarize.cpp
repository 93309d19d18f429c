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

#include "kaf/diarize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace kaf {

namespace {

Embedding renormalized(const Eigen::VectorXd& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n))
    throw ContractViolation("SpeakerCluster: centroid has zero norm");
  return Embedding(v / n);
}

std::int64_t seconds_to_ms(double s) { return std::llround(s * 1000.0); }

}  // namespace

SpeakerCluster::SpeakerCluster(std::int64_t id_in, std::vector<std::int64_t> members_in,
                               const Embedding& centroid_direction)
    : id(id_in),
      members(std::move(members_in)),
      centroid(renormalized(centroid_direction.values())) {}

std::int64_t RefineConfig::chunk_len_ms() const { return seconds_to_ms(chunk_len_s); }
std::int64_t RefineConfig::max_accum_ms() const { return seconds_to_ms(max_accum_s); }
std::int64_t RefineConfig::max_gap_ms() const { return seconds_to_ms(max_gap_s); }

void RefineConfig::validate() const {
  if (!(split_threshold > 0.0) || !(split_threshold <= merge_threshold) ||
      !(merge_threshold < 1.0))
    throw ConfigError("refine: need 0 < split_threshold <= merge_threshold < 1");
  if (!(chunk_len_s > 0.0)) throw ConfigError("refine: chunk_len_s must be > 0");
  if (!(max_accum_s > 0.0)) throw ConfigError("refine: max_accum_s must be > 0");
  if (max_gap_s < 0.0) throw ConfigError("refine: max_gap_s must be >= 0");
}

ClusterMergeResult merge_speaker_clusters(const std::vector<SpeakerCluster>& clusters,
                                          const RefineConfig& cfg) {
  ClusterMergeResult result;
  if (clusters.empty()) return result;

  struct Live {
    std::int64_t canonical;
    std::vector<std::int64_t> group;    // input ids merged into this cluster
    std::vector<std::int64_t> members;
    Eigen::VectorXd centroid;           // unit norm
    std::size_t weight;
  };

  std::vector<Live> live;
  live.reserve(clusters.size());
  for (const auto& c : clusters) {
    if (c.weight() == 0)
      throw ContractViolation("merge_speaker_clusters: cluster " +
                              std::to_string(c.id) + " has no members");
    live.push_back({c.id, {c.id}, c.members, c.centroid.values(), c.weight()});
  }
  // Sorted order makes the tie-break (smallest id pair first) a plain scan.
  std::sort(live.begin(), live.end(),
            [](const Live& a, const Live& b) { return a.canonical < b.canonical; });

  for (;;) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i + 1 < live.size(); ++i) {
      for (std::size_t j = i + 1; j < live.size(); ++j) {
        const double sim = std::clamp(live[i].centroid.dot(live[j].centroid), -1.0, 1.0);
        if (sim > best) {
          best = sim;
          bi = i;
          bj = j;
        }
      }
    }
    if (!(best > cfg.merge_threshold)) break;

    Live& a = live[bi];
    Live& b = live[bj];
    Eigen::VectorXd mean = static_cast<double>(a.weight) * a.centroid +
                           static_cast<double>(b.weight) * b.centroid;
    const double norm = mean.norm();
    if (!(norm > 0.0))
      throw ContractViolation("merge_speaker_clusters: degenerate merged centroid");
    a.centroid = mean / norm;
    a.weight += b.weight;
    a.canonical = std::min(a.canonical, b.canonical);
    a.group.insert(a.group.end(), b.group.begin(), b.group.end());
    a.members.insert(a.members.end(), b.members.begin(), b.members.end());
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(bj));
  }

  std::sort(live.begin(), live.end(),
            [](const Live& a, const Live& b) { return a.canonical < b.canonical; });
  for (const auto& l : live) {
    for (std::int64_t old_id : l.group) result.relabel[old_id] = l.canonical;
    result.clusters.emplace_back(l.canonical, l.members, Embedding(l.centroid));
  }
  return result;
}

std::vector<TimeSpan> cut_into_chunks(const TimeSpan& span, std::int64_t chunk_ms) {
  if (chunk_ms <= 0) throw ContractViolation("cut_into_chunks: chunk_ms must be > 0");
  std::vector<TimeSpan> chunks;
  for (std::int64_t lo = span.start_ms(); lo < span.end_ms(); lo += chunk_ms) {
    const std::int64_t hi = std::min(lo + chunk_ms, span.end_ms());
    chunks.push_back(TimeSpan::from_millis(lo, hi));
  }
  return chunks;
}

namespace {

// Argmax cluster by centroid similarity; ties go to the smallest id.
std::int64_t nearest_cluster(const Embedding& e,
                             const std::vector<SpeakerCluster>& clusters) {
  double best = -std::numeric_limits<double>::infinity();
  std::int64_t best_id = 0;
  bool found = false;
  for (const auto& c : clusters) {
    const double sim = cosine_similarity(e, c.centroid);
    if (!found || sim > best || (sim == best && c.id < best_id)) {
      best = sim;
      best_id = c.id;
      found = true;
    }
  }
  if (!found) throw ContractViolation("reassign_chunks: no clusters to assign to");
  return best_id;
}

}  // namespace

std::vector<Segment> reassign_chunks(const std::vector<Segment>& segments,
                                     const std::vector<SpeakerCluster>& clusters,
                                     EmbeddingBackend& embed,
                                     const RefineConfig& cfg,
                                     RefineReport* report) {
  const std::int64_t chunk_ms = cfg.chunk_len_ms();
  std::vector<Segment> out;
  out.reserve(segments.size());

  for (const auto& seg : segments) {
    std::vector<TimeSpan> chunks = cut_into_chunks(seg.span, chunk_ms);
    if (chunks.size() < 2) {
      out.push_back(seg);  // no adjacent pair can disagree
      continue;
    }

    std::vector<Embedding> embeddings;
    embeddings.reserve(chunks.size());
    bool backend_failed = false;
    try {
      for (const auto& c : chunks) embeddings.push_back(embed.embed(seg.source, c));
    } catch (const Error&) {
      backend_failed = true;
    }
    if (backend_failed) {
      if (report) ++report->backend_failures;
      out.push_back(seg);
      continue;
    }

    bool impure = false;
    for (std::size_t i = 0; i + 1 < embeddings.size(); ++i) {
      if (cosine_similarity(embeddings[i], embeddings[i + 1]) < cfg.split_threshold) {
        impure = true;
        break;
      }
    }
    if (!impure) {
      out.push_back(seg);
      continue;
    }

    if (report) ++report->segments_split;
    std::vector<std::int64_t> labels(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i)
      labels[i] = nearest_cluster(embeddings[i], clusters);

    // Coalesce equal-label runs back into segments.
    std::size_t run_begin = 0;
    for (std::size_t i = 1; i <= chunks.size(); ++i) {
      if (i == chunks.size() || labels[i] != labels[run_begin]) {
        Segment piece = seg;
        piece.span = TimeSpan::from_millis(chunks[run_begin].start_ms(),
                                           chunks[i - 1].end_ms());
        piece.speaker = labels[run_begin];
        out.push_back(std::move(piece));
        run_begin = i;
      }
    }
  }
  return out;
}

std::vector<Segment> merge_segments(const std::vector<Segment>& segments,
                                    const RefineConfig& cfg,
                                    RefineReport* report) {
  std::vector<Segment> out;
  if (segments.empty()) return out;

  const std::int64_t max_accum = cfg.max_accum_ms();
  const std::int64_t max_gap = cfg.max_gap_ms();

  Segment open = segments.front();
  for (std::size_t i = 1; i < segments.size(); ++i) {
    const Segment& next = segments[i];
    if (next.span.start_ms() < open.span.end_ms())
      throw ContractViolation("merge_segments: segments overlap or are unsorted");
    const std::int64_t gap = next.span.start_ms() - open.span.end_ms();
    const bool mergeable = next.speaker == open.speaker &&
                           next.source == open.source && gap <= max_gap &&
                           open.span.duration_ms() <= max_accum;
    if (mergeable) {
      open.span = TimeSpan::from_millis(open.span.start_ms(), next.span.end_ms());
      if (report) ++report->segments_merged;
    } else {
      out.push_back(open);
      open = next;
    }
  }
  out.push_back(open);
  return out;
}

}  // namespace kaf
