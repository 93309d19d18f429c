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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kaf/backends.hpp"
#include "kaf/core.hpp"
#include "kaf/rng.hpp"

// Chunk-wise streaming detokenizer scheduling. The stream is cut into
// token chunks; each chunk is decoded conditioned on itself plus n
// look-ahead tokens borrowed from the next chunk, with all prior chunks as
// prompt, and only the chunk's own frames are emitted. Look-ahead frames
// are decoded again with the next chunk and discarded here, which buys
// boundary continuity at the price of delaying the first chunk by n token
// periods.

namespace kaf {

struct StreamConfig {
  std::size_t chunk_tokens = 12;  // ~1 s at 12.5 Hz
  std::size_t lookahead_n = 4;
  bool dynamic = false;           // sample chunk sizes instead of fixed
  double dynamic_min_s = 0.5;
  double dynamic_max_s = 3.0;
  Eigen::Index mel_dim = 4;       // mock payload width

  std::size_t dynamic_min_tokens() const;  // ceil(min * 12.5)
  std::size_t dynamic_max_tokens() const;  // floor(max * 12.5)

  void validate() const;  // throws ConfigError
};

struct ChunkPlan {
  std::size_t index = 0;
  std::size_t token_lo = 0;
  std::size_t token_hi = 0;   // exclusive
  std::size_t lookahead = 0;  // min(n, tokens remaining after token_hi)
  std::size_t visible_hi = 0; // token_hi + lookahead; visibility is [0, visible_hi)
  std::size_t frame_lo = 0;   // retained mel frames: [4*token_lo, 4*token_hi)
  std::size_t frame_hi = 0;

  bool operator==(const ChunkPlan&) const = default;
};

// Fixed-size plans: ceil(total/chunk_tokens) chunks, last possibly short.
std::vector<ChunkPlan> plan_chunks(std::size_t total_tokens, const StreamConfig& cfg);

// Plans over explicit chunk sizes (dynamic mode).
std::vector<ChunkPlan> plan_chunks(std::size_t total_tokens,
                                   const std::vector<std::size_t>& chunk_sizes,
                                   std::size_t lookahead_n);

// Uniform draws over [dynamic_min_tokens, dynamic_max_tokens] until the
// stream is covered; the final size is truncated to fit.
std::vector<std::size_t> dynamic_chunk_sizes(std::size_t total_tokens,
                                             SeededRng& rng,
                                             const StreamConfig& cfg);

// M(q, k) true iff frame k's chunk index <= frame q's chunk index: full
// attention within a chunk, causal across chunks.
Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> build_block_causal_mask(
    const std::vector<std::size_t>& chunk_sizes_frames);

// One emitted block of retained frames.
struct MelBlock {
  Eigen::MatrixXd frames;  // rows = frame_hi - frame_lo, cols = mel_dim
  std::size_t frame_lo = 0;
  std::size_t frame_hi = 0;
};

class MelSink {
 public:
  virtual ~MelSink() = default;
  virtual void push(MelBlock block) = 0;
};

// Gathers every emitted block; concat() stitches them into one matrix.
class CollectSink : public MelSink {
 public:
  void push(MelBlock block) override { blocks.push_back(std::move(block)); }
  Eigen::MatrixXd concat() const;

  std::vector<MelBlock> blocks;
};

struct ChunkEmission {
  std::size_t index = 0;
  std::size_t token_lo = 0;
  std::size_t token_hi = 0;
  std::size_t lookahead = 0;
  std::size_t retained_frames = 0;
  // Simulated clock: tokens arrive at 12.5 Hz, so the chunk becomes
  // decodable once its visible range is complete.
  double emit_time_s = 0.0;
};

struct StreamReport {
  std::vector<ChunkEmission> chunks;
  // Added first-chunk delay from look-ahead: lookahead_n token periods.
  double first_frame_latency_s = 0.0;
  std::size_t total_tokens = 0;
  std::size_t total_retained_frames = 0;
  std::uint64_t frame_checksum = kFnvOffset;  // fnv1a64 over emitted frame bytes
  bool aborted = false;
  std::string error;
};

// Running checksum over a block's payload bytes, row-major.
std::uint64_t checksum_frames(const Eigen::MatrixXd& frames, std::uint64_t h);

// Drives the decoder over the plans, pushing retained frames to the sink
// in order. A decoder failure aborts with a partial report listing the
// chunks that completed.
StreamReport run_stream(const TokenStream& tokens, const StreamConfig& cfg,
                        MelDecoderBackend& decoder, MelSink& sink);
StreamReport run_stream(const TokenStream& tokens,
                        const std::vector<ChunkPlan>& plans,
                        const StreamConfig& cfg, MelDecoderBackend& decoder,
                        MelSink& sink);

}  // namespace kaf
