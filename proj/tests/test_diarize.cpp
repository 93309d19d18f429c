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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <vector>

#include "kaf/diarize.hpp"
#include "kaf/rng.hpp"

using namespace kaf;

namespace {

Embedding unit2(double x, double y) {
  Eigen::VectorXd v(2);
  v << x, y;
  return Embedding(v / v.norm());
}

SpeakerCluster cluster(std::int64_t id, std::size_t weight, const Embedding& c) {
  std::vector<std::int64_t> members(weight);
  for (std::size_t i = 0; i < weight; ++i) members[i] = static_cast<std::int64_t>(i);
  return SpeakerCluster(id, members, c);
}

// Unit vector at an angle, dim 2.
Embedding at_angle(double rad) { return unit2(std::cos(rad), std::sin(rad)); }

Segment seg(const std::string& asset, double start_s, double end_s,
            std::int64_t speaker) {
  Segment s;
  s.span = TimeSpan::from_seconds(start_s, end_s);
  s.speaker = speaker;
  s.source = asset;
  return s;
}

// Scripted embedding backend: exact per-span table, throws on misses.
class TableBackend : public EmbeddingBackend {
 public:
  void set(const std::string& asset, const TimeSpan& span, const Embedding& e) {
    table_.emplace(key(asset, span), e);
  }
  Embedding embed(const std::string& asset, const TimeSpan& span) override {
    auto it = table_.find(key(asset, span));
    if (it == table_.end()) throw IoError("no embedding for " + key(asset, span));
    return it->second;
  }

 private:
  static std::string key(const std::string& a, const TimeSpan& s) {
    return a + "/" + std::to_string(s.start_ms()) + "/" + std::to_string(s.end_ms());
  }
  std::map<std::string, Embedding> table_;
};

// Oracle cosine over raw arrays, no Eigen: an independent route.
double cos_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> to_vec(const Embedding& e) {
  return {e.values().data(), e.values().data() + e.dim()};
}

// Reference merge oracle: full recompute of all pair similarities from
// scratch every round, plain loops, no incremental state.
std::map<std::int64_t, std::int64_t> merge_oracle(std::vector<SpeakerCluster> cs,
                                                  double threshold) {
  struct G {
    std::int64_t id;
    std::vector<std::int64_t> group;
    std::vector<double> centroid;
    double weight;
  };
  std::vector<G> gs;
  for (const auto& c : cs)
    gs.push_back({c.id, {c.id}, to_vec(c.centroid), static_cast<double>(c.weight())});
  std::sort(gs.begin(), gs.end(), [](const G& a, const G& b) { return a.id < b.id; });

  for (;;) {
    double best = -2;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < gs.size(); ++i)
      for (std::size_t j = i + 1; j < gs.size(); ++j) {
        const double s = cos_oracle(gs[i].centroid, gs[j].centroid);
        if (s > best) {
          best = s;
          bi = i;
          bj = j;
        }
      }
    if (gs.size() < 2 || !(best > threshold)) break;
    G merged;
    merged.id = std::min(gs[bi].id, gs[bj].id);
    merged.group = gs[bi].group;
    merged.group.insert(merged.group.end(), gs[bj].group.begin(), gs[bj].group.end());
    merged.weight = gs[bi].weight + gs[bj].weight;
    merged.centroid.resize(gs[bi].centroid.size());
    double norm = 0;
    for (std::size_t k = 0; k < merged.centroid.size(); ++k) {
      merged.centroid[k] =
          gs[bi].weight * gs[bi].centroid[k] + gs[bj].weight * gs[bj].centroid[k];
      norm += merged.centroid[k] * merged.centroid[k];
    }
    norm = std::sqrt(norm);
    for (auto& x : merged.centroid) x /= norm;
    std::vector<G> rest;
    for (std::size_t k = 0; k < gs.size(); ++k)
      if (k != bi && k != bj) rest.push_back(gs[k]);
    rest.push_back(std::move(merged));
    std::sort(rest.begin(), rest.end(), [](const G& a, const G& b) { return a.id < b.id; });
    gs = std::move(rest);
  }

  std::map<std::int64_t, std::int64_t> relabel;
  for (const auto& g : gs)
    for (auto old : g.group) relabel[old] = g.id;
  return relabel;
}

}  // namespace

TEST_CASE("merge fires above the threshold and not below") {
  RefineConfig cfg;
  // cos = 0.61 exactly by construction.
  const auto a = unit2(1, 0);
  const auto fire = unit2(0.61, std::sqrt(1 - 0.61 * 0.61));
  const auto hold = unit2(0.59, std::sqrt(1 - 0.59 * 0.59));

  auto merged = merge_speaker_clusters({cluster(3, 2, a), cluster(7, 2, fire)}, cfg);
  CHECK(merged.relabel.at(3) == 3);
  CHECK(merged.relabel.at(7) == 3);
  CHECK(merged.clusters.size() == 1);

  auto kept = merge_speaker_clusters({cluster(3, 2, a), cluster(7, 2, hold)}, cfg);
  CHECK(kept.relabel.at(3) == 3);
  CHECK(kept.relabel.at(7) == 7);
  CHECK(kept.clusters.size() == 2);
}

TEST_CASE("orthogonal centroids stay distinct") {
  RefineConfig cfg;
  auto r = merge_speaker_clusters({cluster(1, 3, unit2(1, 0)), cluster(2, 3, unit2(0, 1))},
                                  cfg);
  CHECK(r.relabel.at(1) == 1);
  CHECK(r.relabel.at(2) == 2);
}

TEST_CASE("three-cluster chain matches the exhaustive oracle") {
  RefineConfig cfg;
  // A~B 0.9ish, B~C 0.65ish, A~C lower: merging A,B recenters the pair before
  // C is considered.
  const auto A = at_angle(0.0);
  const auto B = at_angle(std::acos(0.9));
  const auto C = at_angle(std::acos(0.9) + std::acos(0.65));
  const std::vector<SpeakerCluster> in = {cluster(10, 4, A), cluster(20, 2, B),
                                          cluster(30, 1, C)};
  const auto got = merge_speaker_clusters(in, cfg);
  const auto want = merge_oracle(in, cfg.merge_threshold);
  CHECK(got.relabel == want);
}

TEST_CASE("merge equals oracle on randomized instances and scaling leaves it fixed") {
  SeededRng rng(2024);
  for (int trial = 0; trial < 150; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(0, 3));
    const int dim = 2 + static_cast<int>(rng.uniform_int(0, 6));
    std::vector<SpeakerCluster> cs;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd v(dim);
      for (int d = 0; d < dim; ++d) v(d) = 2.0 * rng.uniform_double() - 1.0;
      if (v.norm() == 0.0) v(0) = 1.0;
      cs.push_back(cluster(10 * (i + 1), 1 + rng.uniform_int(0, 4), Embedding(v)));
    }
    RefineConfig cfg;
    const auto got = merge_speaker_clusters(cs, cfg);
    CHECK(got.relabel == merge_oracle(cs, cfg.merge_threshold));

    // Idempotent relabeling and cosine scale invariance.
    for (const auto& [old_id, canon] : got.relabel)
      CHECK(got.relabel.at(canon) == canon);
    std::vector<SpeakerCluster> scaled;
    for (const auto& c : cs)
      scaled.push_back(SpeakerCluster(c.id, c.members, Embedding(3.7 * c.centroid.values())));
    CHECK(merge_speaker_clusters(scaled, cfg).relabel == got.relabel);
  }
}

TEST_CASE("empty cluster input yields an empty map") {
  RefineConfig cfg;
  CHECK(merge_speaker_clusters({}, cfg).relabel.empty());
}

TEST_CASE("chunk cutting partitions the span, last chunk short") {
  const auto chunks = cut_into_chunks(TimeSpan::from_seconds(0.0, 4.5), 1500);
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[0] == TimeSpan::from_millis(0, 1500));
  CHECK(chunks[2] == TimeSpan::from_millis(3000, 4500));

  const auto tail = cut_into_chunks(TimeSpan::from_seconds(1.0, 4.6), 1500);
  REQUIRE(tail.size() == 3);
  CHECK(tail[2] == TimeSpan::from_millis(4000, 4600));
}

TEST_CASE("pure segments come back unchanged") {
  RefineConfig cfg;
  TableBackend be;
  const auto s = seg("a", 0.0, 4.5, 1);
  const auto e = unit2(1, 0.1);
  for (const auto& c : cut_into_chunks(s.span, cfg.chunk_len_ms())) be.set("a", c, e);
  const std::vector<SpeakerCluster> clusters = {cluster(1, 2, unit2(1, 0)),
                                                cluster(2, 2, unit2(0, 1))};
  RefineReport rep;
  const auto out = reassign_chunks({s}, clusters, be, cfg, &rep);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == s);
  CHECK(rep.segments_split == 0);
}

TEST_CASE("impure segment splits at the chunk boundary and reassigns") {
  RefineConfig cfg;
  TableBackend be;
  const auto s = seg("a", 0.0, 3.0, 7);
  be.set("a", TimeSpan::from_millis(0, 1500), unit2(1, 0));
  be.set("a", TimeSpan::from_millis(1500, 3000), unit2(0, 1));  // cos 0.0 < 0.5
  const std::vector<SpeakerCluster> clusters = {cluster(7, 2, unit2(1, 0.05)),
                                                cluster(9, 2, unit2(0.05, 1))};
  RefineReport rep;
  const auto out = reassign_chunks({s}, clusters, be, cfg, &rep);
  REQUIRE(out.size() == 2);
  CHECK(out[0].span == TimeSpan::from_millis(0, 1500));
  CHECK(out[0].speaker == 7);
  CHECK(out[1].span == TimeSpan::from_millis(1500, 3000));
  CHECK(out[1].speaker == 9);
  CHECK(rep.segments_split == 1);
}

TEST_CASE("split threshold boundary: 0.49 fires, 0.50 and 0.51 do not") {
  RefineConfig cfg;
  const std::vector<SpeakerCluster> clusters = {cluster(1, 2, unit2(1, 0)),
                                                cluster(2, 2, unit2(0, 1))};
  auto run_with_similarity = [&](double target) {
    TableBackend be;
    const auto s = seg("a", 0.0, 3.0, 1);
    be.set("a", TimeSpan::from_millis(0, 1500), unit2(1, 0));
    be.set("a", TimeSpan::from_millis(1500, 3000),
           unit2(target, std::sqrt(1 - target * target)));
    return reassign_chunks({s}, clusters, be, cfg).size();
  };
  CHECK(run_with_similarity(0.49) == 2);
  CHECK(run_with_similarity(0.50) == 1);
  CHECK(run_with_similarity(0.51) == 1);
}

TEST_CASE("backend failure passes the segment through and flags it") {
  RefineConfig cfg;
  TableBackend be;  // empty: every lookup fails
  const auto s = seg("a", 0.0, 3.0, 1);
  RefineReport rep;
  const auto out =
      reassign_chunks({s}, {cluster(1, 1, unit2(1, 0))}, be, cfg, &rep);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == s);
  CHECK(rep.backend_failures == 1);
}

TEST_CASE("reassignment matches the exhaustive argmax oracle") {
  RefineConfig cfg;
  SeededRng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int n_clusters = 2 + static_cast<int>(rng.uniform_int(0, 3));
    const int dim = 2 + static_cast<int>(rng.uniform_int(0, 6));
    std::vector<SpeakerCluster> clusters;
    for (int c = 0; c < n_clusters; ++c) {
      Eigen::VectorXd v(dim);
      for (int d = 0; d < dim; ++d) v(d) = 2.0 * rng.uniform_double() - 1.0;
      if (v.norm() == 0.0) v(0) = 1.0;
      clusters.push_back(cluster(c + 1, 1, Embedding(v)));
    }

    const int n_segments = 1 + static_cast<int>(rng.uniform_int(0, 11));
    TableBackend be;
    std::vector<Segment> segments;
    std::vector<std::vector<std::vector<double>>> chunk_embs(n_segments);
    std::int64_t cursor_ms = 0;
    for (int i = 0; i < n_segments; ++i) {
      const std::int64_t len_ms = 300 + 300 * static_cast<std::int64_t>(rng.uniform_int(0, 15));
      Segment s = seg("x", 0, 1, 1 + static_cast<std::int64_t>(
                                        rng.uniform_int(0, n_clusters - 1)));
      s.span = TimeSpan::from_millis(cursor_ms, cursor_ms + len_ms);
      cursor_ms += len_ms + static_cast<std::int64_t>(rng.uniform_int(0, 3000));
      for (const auto& c : cut_into_chunks(s.span, cfg.chunk_len_ms())) {
        Eigen::VectorXd v(dim);
        for (int d = 0; d < dim; ++d) v(d) = 2.0 * rng.uniform_double() - 1.0;
        if (v.norm() == 0.0) v(0) = 1.0;
        be.set("x", c, Embedding(v));
        chunk_embs[i].push_back({v.data(), v.data() + dim});
      }
      segments.push_back(s);
    }

    const auto got = reassign_chunks(segments, clusters, be, cfg);

    // Oracle: plain-loop recomputation of the whole rule.
    std::vector<Segment> want;
    for (int i = 0; i < n_segments; ++i) {
      const auto chunks = cut_into_chunks(segments[i].span, cfg.chunk_len_ms());
      bool impure = false;
      for (std::size_t k = 0; k + 1 < chunks.size(); ++k)
        if (cos_oracle(chunk_embs[i][k], chunk_embs[i][k + 1]) < cfg.split_threshold)
          impure = true;
      if (!impure) {
        want.push_back(segments[i]);
        continue;
      }
      std::vector<std::int64_t> labels;
      for (const auto& ce : chunk_embs[i]) {
        double best = -2;
        std::int64_t best_id = 0;
        for (const auto& cl : clusters) {
          const double s = cos_oracle(ce, to_vec(cl.centroid));
          if (s > best || (s == best && cl.id < best_id)) {
            best = s;
            best_id = cl.id;
          }
        }
        labels.push_back(best_id);
      }
      std::size_t lo = 0;
      for (std::size_t k = 1; k <= chunks.size(); ++k) {
        if (k == chunks.size() || labels[k] != labels[lo]) {
          Segment piece = segments[i];
          piece.span = TimeSpan::from_millis(chunks[lo].start_ms(), chunks[k - 1].end_ms());
          piece.speaker = labels[lo];
          want.push_back(piece);
          lo = k;
        }
      }
    }
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);

    // Duration bookkeeping: totals agree to the millisecond.
    std::int64_t in_ms = 0, out_ms = 0;
    for (const auto& s : segments) in_ms += s.span.duration_ms();
    for (const auto& s : got) out_ms += s.span.duration_ms();
    CHECK(in_ms == out_ms);
  }
}

TEST_CASE("segment merge: gap within bound merges") {
  RefineConfig cfg;
  const auto out = merge_segments({seg("a", 0, 10, 1), seg("a", 11, 20, 1)}, cfg);
  REQUIRE(out.size() == 1);
  CHECK(out[0].span == TimeSpan::from_seconds(0, 20));
}

TEST_CASE("segment merge: gap beyond bound splits") {
  RefineConfig cfg;
  const auto out = merge_segments({seg("a", 0, 10, 1), seg("a", 12.5, 20, 1)}, cfg);
  CHECK(out.size() == 2);
}

TEST_CASE("segment merge: gap boundary is strict") {
  RefineConfig cfg;
  // gap exactly 2.000 s merges; 2.001 s does not.
  CHECK(merge_segments({seg("a", 0, 10, 1), seg("a", 12.0, 20, 1)}, cfg).size() == 1);
  CHECK(merge_segments({seg("a", 0, 10, 1), seg("a", 12.001, 20, 1)}, cfg).size() == 2);
}

TEST_CASE("segment merge: accumulation closes after exceeding the cap") {
  RefineConfig cfg;
  const auto out = merge_segments(
      {seg("a", 0, 15, 1), seg("a", 15, 29, 1), seg("a", 29, 31, 1)}, cfg);
  REQUIRE(out.size() == 2);
  CHECK(out[0].span == TimeSpan::from_seconds(0, 29));
  CHECK(out[1].span == TimeSpan::from_seconds(29, 31));
}

TEST_CASE("segment merge: accumulation boundary is strict") {
  RefineConfig cfg;
  // open length exactly 27 s still accepts a neighbor...
  const auto at27 = merge_segments({seg("a", 0, 27, 1), seg("a", 27, 28, 1)}, cfg);
  CHECK(at27.size() == 1);
  // ...but 27.001 s does not.
  const auto past = merge_segments({seg("a", 0, 27.001, 1), seg("a", 27.001, 28, 1)}, cfg);
  CHECK(past.size() == 2);
}

TEST_CASE("different speakers never merge") {
  RefineConfig cfg;
  CHECK(merge_segments({seg("a", 0, 10, 1), seg("a", 10, 20, 2)}, cfg).size() == 2);
}

namespace {

// Reference greedy stepper, written as an explicit state walk.
std::vector<Segment> merge_oracle_segments(const std::vector<Segment>& in,
                                           const RefineConfig& cfg) {
  std::vector<Segment> out;
  std::size_t i = 0;
  while (i < in.size()) {
    Segment open = in[i];
    std::size_t j = i + 1;
    while (j < in.size()) {
      const bool same = in[j].speaker == open.speaker && in[j].source == open.source;
      const bool gap_ok =
          in[j].span.start_ms() - open.span.end_ms() <= cfg.max_gap_ms();
      const bool accum_ok = open.span.duration_ms() <= cfg.max_accum_ms();
      if (!(same && gap_ok && accum_ok)) break;
      open.span = TimeSpan::from_millis(open.span.start_ms(), in[j].span.end_ms());
      ++j;
    }
    out.push_back(open);
    i = j;
  }
  return out;
}

}  // namespace

TEST_CASE("segment merge matches the reference stepper on random inputs") {
  SeededRng rng(555);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Segment> in;
    std::int64_t cursor = 0;
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 11));
    for (int i = 0; i < n; ++i) {
      cursor += static_cast<std::int64_t>(rng.uniform_int(0, 4000));
      const std::int64_t len = 500 + static_cast<std::int64_t>(rng.uniform_int(0, 30000));
      in.push_back(seg("a", 0, 1, static_cast<std::int64_t>(rng.uniform_int(1, 3))));
      in.back().span = TimeSpan::from_millis(cursor, cursor + len);
      cursor += len;
    }
    RefineConfig cfg;
    const auto got = merge_segments(in, cfg);
    const auto want = merge_oracle_segments(in, cfg);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);

    // No adjacent output pair still satisfies all three merge conditions.
    for (std::size_t i = 0; i + 1 < got.size(); ++i) {
      const bool same = got[i].speaker == got[i + 1].speaker;
      const bool gap_ok =
          got[i + 1].span.start_ms() - got[i].span.end_ms() <= cfg.max_gap_ms();
      const bool accum_ok = got[i].span.duration_ms() <= cfg.max_accum_ms();
      const bool still_mergeable = same && gap_ok && accum_ok;
      CHECK_FALSE(still_mergeable);
    }
    // Coverage: every input span lies inside some output span.
    for (const auto& s : in) {
      bool covered = false;
      for (const auto& o : got)
        covered = covered || (o.span.start_ms() <= s.span.start_ms() &&
                              s.span.end_ms() <= o.span.end_ms());
      CHECK(covered);
    }
  }
}

TEST_CASE("config validation") {
  RefineConfig bad;
  bad.split_threshold = 0.7;  // above merge threshold
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  RefineConfig good;
  CHECK_NOTHROW(good.validate());
}
