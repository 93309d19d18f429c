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

#include "kaf/stream.hpp"

#include <algorithm>
#include <cmath>
#include <span>

namespace kaf {

std::size_t StreamConfig::dynamic_min_tokens() const {
  return static_cast<std::size_t>(std::ceil(dynamic_min_s * kSemanticTokenRateHz));
}

std::size_t StreamConfig::dynamic_max_tokens() const {
  return static_cast<std::size_t>(std::floor(dynamic_max_s * kSemanticTokenRateHz));
}

void StreamConfig::validate() const {
  if (chunk_tokens < 1) throw ConfigError("stream: chunk_tokens must be >= 1");
  if (mel_dim < 1) throw ConfigError("stream: mel_dim must be >= 1");
  if (dynamic) {
    if (!(dynamic_min_s > 0.0) || !(dynamic_min_s <= dynamic_max_s))
      throw ConfigError("stream: need 0 < dynamic_min_s <= dynamic_max_s");
    if (dynamic_min_tokens() < 1)
      throw ConfigError("stream: dynamic_min_s shorter than one token period");
  }
}

std::vector<ChunkPlan> plan_chunks(std::size_t total_tokens,
                                   const std::vector<std::size_t>& chunk_sizes,
                                   std::size_t lookahead_n) {
  std::vector<ChunkPlan> plans;
  std::size_t lo = 0;
  for (std::size_t size : chunk_sizes) {
    if (size == 0) throw ContractViolation("plan_chunks: zero chunk size");
    if (lo >= total_tokens) break;
    ChunkPlan p;
    p.index = plans.size();
    p.token_lo = lo;
    p.token_hi = std::min(lo + size, total_tokens);
    p.lookahead = std::min(lookahead_n, total_tokens - p.token_hi);
    p.visible_hi = p.token_hi + p.lookahead;
    p.frame_lo = tokens_to_mel_frames(p.token_lo);
    p.frame_hi = tokens_to_mel_frames(p.token_hi);
    plans.push_back(p);
    lo = p.token_hi;
  }
  if (lo < total_tokens)
    throw ContractViolation("plan_chunks: chunk sizes cover only " +
                            std::to_string(lo) + " of " +
                            std::to_string(total_tokens) + " tokens");
  return plans;
}

std::vector<ChunkPlan> plan_chunks(std::size_t total_tokens, const StreamConfig& cfg) {
  cfg.validate();
  if (total_tokens == 0) return {};
  const std::size_t n_chunks = (total_tokens + cfg.chunk_tokens - 1) / cfg.chunk_tokens;
  std::vector<std::size_t> sizes(n_chunks, cfg.chunk_tokens);
  return plan_chunks(total_tokens, sizes, cfg.lookahead_n);
}

std::vector<std::size_t> dynamic_chunk_sizes(std::size_t total_tokens,
                                             SeededRng& rng,
                                             const StreamConfig& cfg) {
  const std::size_t lo = cfg.dynamic_min_tokens();
  const std::size_t hi = cfg.dynamic_max_tokens();
  std::vector<std::size_t> sizes;
  std::size_t covered = 0;
  while (covered < total_tokens) {
    std::size_t draw = static_cast<std::size_t>(rng.uniform_int(lo, hi));
    draw = std::min(draw, total_tokens - covered);
    sizes.push_back(draw);
    covered += draw;
  }
  return sizes;
}

Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> build_block_causal_mask(
    const std::vector<std::size_t>& chunk_sizes_frames) {
  std::size_t total = 0;
  for (std::size_t s : chunk_sizes_frames) {
    if (s == 0) throw ContractViolation("build_block_causal_mask: zero chunk size");
    total += s;
  }
  // Chunk index per frame.
  std::vector<std::size_t> owner(total);
  std::size_t frame = 0;
  for (std::size_t c = 0; c < chunk_sizes_frames.size(); ++c)
    for (std::size_t k = 0; k < chunk_sizes_frames[c]; ++k) owner[frame++] = c;

  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask(total, total);
  for (std::size_t q = 0; q < total; ++q)
    for (std::size_t k = 0; k < total; ++k)
      mask(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(k)) =
          owner[k] <= owner[q];
  return mask;
}

Eigen::MatrixXd CollectSink::concat() const {
  std::size_t rows = 0;
  for (const auto& b : blocks) rows += static_cast<std::size_t>(b.frames.rows());
  if (blocks.empty()) return {};
  Eigen::MatrixXd all(static_cast<Eigen::Index>(rows), blocks.front().frames.cols());
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    all.middleRows(at, b.frames.rows()) = b.frames;
    at += b.frames.rows();
  }
  return all;
}

std::uint64_t checksum_frames(const Eigen::MatrixXd& frames, std::uint64_t h) {
  for (Eigen::Index r = 0; r < frames.rows(); ++r)
    for (Eigen::Index c = 0; c < frames.cols(); ++c) {
      const double v = frames(r, c);
      h = fnv1a64(&v, sizeof(v), h);
    }
  return h;
}

StreamReport run_stream(const TokenStream& tokens,
                        const std::vector<ChunkPlan>& plans,
                        const StreamConfig& cfg, MelDecoderBackend& decoder,
                        MelSink& sink) {
  if (tokens.kind != StreamKind::semantic_audio)
    throw ContractViolation("run_stream: expects a semantic audio stream");

  StreamReport report;
  report.total_tokens = tokens.size();
  report.first_frame_latency_s = tokens_to_seconds(cfg.lookahead_n);

  std::vector<PromptChunk> prompt;
  prompt.reserve(plans.size());

  for (const ChunkPlan& plan : plans) {
    const std::span<const std::int32_t> all(tokens.tokens);
    const auto condition = all.subspan(plan.token_lo, plan.visible_hi - plan.token_lo);

    Eigen::MatrixXd frames;
    try {
      frames = decoder.decode(prompt, condition);
    } catch (const std::exception& e) {
      report.aborted = true;
      report.error = "decoder failed on chunk " + std::to_string(plan.index) +
                     ": " + e.what();
      return report;
    }
    const auto expected =
        static_cast<Eigen::Index>(tokens_to_mel_frames(condition.size()));
    if (frames.rows() != expected) {
      report.aborted = true;
      report.error = "decoder returned " + std::to_string(frames.rows()) +
                     " frames for chunk " + std::to_string(plan.index) +
                     ", expected " + std::to_string(expected);
      return report;
    }

    // Retain the chunk's own frames; drop the look-ahead tail.
    const auto retained = static_cast<Eigen::Index>(plan.frame_hi - plan.frame_lo);
    MelBlock block{frames.topRows(retained), plan.frame_lo, plan.frame_hi};
    report.frame_checksum = checksum_frames(block.frames, report.frame_checksum);
    report.total_retained_frames += static_cast<std::size_t>(retained);

    ChunkEmission emission;
    emission.index = plan.index;
    emission.token_lo = plan.token_lo;
    emission.token_hi = plan.token_hi;
    emission.lookahead = plan.lookahead;
    emission.retained_frames = static_cast<std::size_t>(retained);
    emission.emit_time_s = tokens_to_seconds(plan.visible_hi);
    report.chunks.push_back(emission);

    prompt.push_back(PromptChunk{
        {tokens.tokens.begin() + static_cast<std::ptrdiff_t>(plan.token_lo),
         tokens.tokens.begin() + static_cast<std::ptrdiff_t>(plan.token_hi)},
        block.frames});
    sink.push(std::move(block));
  }
  return report;
}

StreamReport run_stream(const TokenStream& tokens, const StreamConfig& cfg,
                        MelDecoderBackend& decoder, MelSink& sink) {
  return run_stream(tokens, plan_chunks(tokens.size(), cfg), cfg, decoder, sink);
}

}  // namespace kaf
