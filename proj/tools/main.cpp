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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "kaf/mocks.hpp"
#include "kaf/pipeline.hpp"

// kaf: deterministic audio-pipeline engine.
// Exit codes: 0 success, 1 I/O, 2 config, 3 contract violation.

namespace {

using kaf::RunConfig;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<double> merge_threshold;
  std::optional<double> split_threshold;
  std::optional<double> chunk_len;
  std::optional<double> max_accum;
  std::optional<double> max_gap;
  std::optional<std::size_t> chunk_tokens;
  std::optional<std::size_t> lookahead;
  bool dynamic = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path,
                  "RunConfig JSON (falls back to $KAF_CONFIG)");
  cmd->add_option("--seed", flags.seed, "global seed override");
  cmd->add_option("--workers", flags.workers, "worker count override");
  cmd->add_option("--merge-threshold", flags.merge_threshold);
  cmd->add_option("--split-threshold", flags.split_threshold);
  cmd->add_option("--chunk-len", flags.chunk_len, "reassignment chunk seconds");
  cmd->add_option("--max-accum", flags.max_accum, "segment-merge accumulation cap");
  cmd->add_option("--max-gap", flags.max_gap, "segment-merge gap cap");
  cmd->add_option("--chunk-tokens", flags.chunk_tokens, "stream chunk size");
  cmd->add_option("--lookahead", flags.lookahead, "stream look-ahead tokens");
  cmd->add_flag("--dynamic", flags.dynamic, "sample dynamic stream chunk sizes");
}

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg;
  std::string path = flags.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("KAF_CONFIG")) path = env;
  }
  if (!path.empty()) cfg = RunConfig::load(path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.workers) cfg.workers = *flags.workers;
  if (flags.merge_threshold) cfg.refine.merge_threshold = *flags.merge_threshold;
  if (flags.split_threshold) cfg.refine.split_threshold = *flags.split_threshold;
  if (flags.chunk_len) cfg.refine.chunk_len_s = *flags.chunk_len;
  if (flags.max_accum) cfg.refine.max_accum_s = *flags.max_accum;
  if (flags.max_gap) cfg.refine.max_gap_s = *flags.max_gap;
  if (flags.chunk_tokens) cfg.stream.chunk_tokens = *flags.chunk_tokens;
  if (flags.lookahead) cfg.stream.lookahead_n = *flags.lookahead;
  if (flags.dynamic) cfg.stream.dynamic = true;
  cfg.session.stream = cfg.stream;
  cfg.validate();
  return cfg;
}

void emit(const nlohmann::json& report, const std::string& report_path) {
  if (report_path.empty()) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  std::ofstream out(report_path, std::ios::binary);
  if (!out) throw kaf::IoError("cannot open report path: " + report_path);
  out << report.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kaf: deterministic audio data pipeline and serving simulators"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string in_path, out_path, report_path;
  std::string embeddings_path, annotations_path, tokens_path, script_path, stats_path;
  kaf::PretrainOptions pretrain;
  std::string task_filter;

  auto* refine = app.add_subcommand("refine", "diarization refinement per asset");
  add_common_flags(refine, flags);
  refine->add_option("input", in_path, "input manifest (jsonl)")->required();
  refine->add_option("output", out_path, "output manifest (jsonl)")->required();
  refine->add_option("--embeddings", embeddings_path,
                     "embedding fixture JSON (default: hash backend)");
  refine->add_option("--report", report_path, "write the run report here");

  auto* annotate = app.add_subcommand("annotate", "language, transcript, enhancement");
  add_common_flags(annotate, flags);
  annotate->add_option("input", in_path)->required();
  annotate->add_option("output", out_path)->required();
  annotate->add_option("--annotations", annotations_path,
                       "annotation fixture JSON (default: hash backend)");
  annotate->add_option("--report", report_path);

  auto* build = app.add_subcommand("build-pretrain", "emit task-sequence container");
  add_common_flags(build, flags);
  build->add_option("input", in_path)->required();
  build->add_option("output", out_path, "KAFSEQ1 container path")->required();
  build->add_option("--count", pretrain.count, "sequences to emit (0 = one per asset)");
  build->add_option("--task", task_filter, "restrict to one task kind");
  build->add_flag("--stats", pretrain.stats, "include per-kind loss statistics");
  build->add_option("--report", report_path);

  auto* simulate = app.add_subcommand("simulate-stream", "chunked detokenizer dry run");
  add_common_flags(simulate, flags);
  simulate->add_option("tokens", tokens_path, "token id file (JSON)")->required();
  simulate->add_option("--report", report_path);

  auto* serve = app.add_subcommand("serve-sim", "scripted conversation simulator");
  add_common_flags(serve, flags);
  serve->add_option("script", script_path, "script file (jsonl)")->required();
  serve->add_option("--report", report_path);

  auto* stats = app.add_subcommand("stats", "summarize a container or manifest");
  stats->add_option("file", stats_path)->required();
  stats->add_option("--report", report_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (*refine) {
      const RunConfig cfg = resolve_config(flags);
      std::unique_ptr<kaf::EmbeddingBackend> embed;
      if (embeddings_path.empty())
        embed = std::make_unique<kaf::HashEmbeddingBackend>(cfg.embedding_dim, cfg.seed);
      else
        embed = std::make_unique<kaf::FixtureEmbeddingBackend>(embeddings_path);
      emit(kaf::cmd_refine(cfg, in_path, out_path, *embed), report_path);
    } else if (*annotate) {
      const RunConfig cfg = resolve_config(flags);
      if (annotations_path.empty()) {
        kaf::HashAnnotationBackend backend(cfg.seed);
        emit(kaf::cmd_annotate(cfg, in_path, out_path, backend, backend), report_path);
      } else {
        kaf::FixtureAnnotationBackend backend(annotations_path);
        emit(kaf::cmd_annotate(cfg, in_path, out_path, backend, backend), report_path);
      }
    } else if (*build) {
      const RunConfig cfg = resolve_config(flags);
      if (!task_filter.empty())
        pretrain.only = kaf::task_kind_from_string(task_filter);
      emit(kaf::cmd_build_pretrain(cfg, in_path, out_path, pretrain), report_path);
    } else if (*simulate) {
      const RunConfig cfg = resolve_config(flags);
      emit(kaf::cmd_simulate_stream(cfg, tokens_path), report_path);
    } else if (*serve) {
      const RunConfig cfg = resolve_config(flags);
      emit(kaf::cmd_serve_sim(cfg, script_path), report_path);
    } else if (*stats) {
      emit(kaf::cmd_stats(stats_path), report_path);
    }
  } catch (const kaf::ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return 3;
  } catch (const kaf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const kaf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
