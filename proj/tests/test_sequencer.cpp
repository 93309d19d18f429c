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

#include "kaf/sequencer.hpp"

using namespace kaf;

namespace {

constexpr std::int32_t kAudioBlank = 500;
constexpr std::int32_t kTextBlank = 900;

TokenStream audio(std::vector<std::int32_t> ids) {
  return TokenStream::semantic(std::move(ids), kAudioBlank);
}
TokenStream text(std::vector<std::int32_t> ids) {
  return TokenStream::text(std::move(ids), kTextBlank);
}

// seg0: audio [10,11,12] / text [70,71]; seg1: audio [20,21] / text [80,81]
std::vector<AlignedPair> two_segments() {
  return {align_streams(audio({10, 11, 12}), text({70, 71})),
          align_streams(audio({20, 21}), text({80, 81}))};
}

struct Flat {
  std::vector<std::int32_t> audio;  // -1 for absent
  std::vector<std::int32_t> text;
  std::vector<std::size_t> segment;
  std::vector<std::string> mode;
  std::vector<bool> loss_audio;
  std::vector<bool> loss_text;
};

Flat flatten(const TaskSequence& seq) {
  Flat f;
  for (std::size_t i = 0; i < seq.positions.size(); ++i) {
    const auto& p = seq.positions[i];
    f.audio.push_back(p.audio.value_or(-1));
    f.text.push_back(p.text.value_or(-1));
    f.segment.push_back(p.segment);
    f.mode.push_back(to_string(p.mode));
    f.loss_audio.push_back(seq.loss_audio[i]);
    f.loss_text.push_back(seq.loss_text[i]);
  }
  return f;
}

// (segment, mode) element runs, for row-shape checks.
std::vector<std::pair<std::size_t, std::string>> element_runs(const TaskSequence& seq) {
  std::vector<std::pair<std::size_t, std::string>> runs;
  for (const auto& p : seq.positions) {
    std::pair<std::size_t, std::string> key{p.segment, to_string(p.mode)};
    if (runs.empty() || runs.back() != key) runs.push_back(key);
  }
  return runs;
}

}  // namespace

TEST_CASE("alignment pads the shorter stream with its blank") {
  const auto p = align_streams(audio(std::vector<std::int32_t>(10, 3)),
                               text({1, 2, 3, 4}));
  CHECK(p.audio.tokens.size() == 10);
  CHECK(p.text.tokens.size() == 10);
  CHECK(p.raw_text_len == 4);
  for (std::size_t i = 4; i < 10; ++i) CHECK(p.text.tokens[i] == kTextBlank);

  const auto equal = align_streams(audio({1, 2, 3, 4, 5}), text({9, 8, 7, 6, 5}));
  CHECK(equal.audio.tokens == std::vector<std::int32_t>{1, 2, 3, 4, 5});
  CHECK(equal.text.tokens == std::vector<std::int32_t>{9, 8, 7, 6, 5});

  const auto rev = align_streams(audio({1, 2, 3}), text({4, 5, 6, 7, 8, 9, 10}));
  CHECK(rev.audio.tokens.size() == 7);
  CHECK(std::vector<std::int32_t>(rev.audio.tokens.begin(), rev.audio.tokens.begin() + 3) ==
        std::vector<std::int32_t>{1, 2, 3});
  for (std::size_t i = 3; i < 7; ++i) CHECK(rev.audio.tokens[i] == kAudioBlank);
}

TEST_CASE("alignment validates kinds and feature counts") {
  CHECK_THROWS_AS(align_streams(text({1}), text({2})), ContractViolation);
  CHECK_THROWS_AS(align_streams(audio({1}), audio({2})), ContractViolation);
  CHECK_THROWS_AS(align_streams(audio({1, 2}), text({3}), FeatureHandle{"x", 5}),
                  ContractViolation);
  CHECK_NOTHROW(align_streams(audio({1, 2}), text({3}), FeatureHandle{"x", 2}));
}

TEST_CASE("delay prepends blanks and composes") {
  const auto x = audio({5, 6, 7});
  CHECK(apply_delay(x, 0).tokens == x.tokens);
  const auto d = apply_delay(audio(std::vector<std::int32_t>(20, 9)), 6);
  CHECK(d.tokens.size() == 26);
  for (int i = 0; i < 6; ++i) CHECK(d.tokens[i] == kAudioBlank);
  CHECK(apply_delay(apply_delay(x, 2), 4).tokens == apply_delay(x, 6).tokens);
}

TEST_CASE("round-trip: stripping padding and delay recovers raw streams") {
  const auto raw_audio = std::vector<std::int32_t>{10, 11, 12};
  const auto raw_text = std::vector<std::int32_t>{70, 71};
  const auto pair = align_streams(audio(raw_audio), text(raw_text));
  auto strip_trailing = [](std::vector<std::int32_t> v, std::int32_t blank) {
    while (!v.empty() && v.back() == blank) v.pop_back();
    return v;
  };
  CHECK(strip_trailing(pair.audio.tokens, kAudioBlank) == raw_audio);
  CHECK(strip_trailing(pair.text.tokens, kTextBlank) == raw_text);

  const auto delayed = apply_delay(pair.audio, 6);
  const std::vector<std::int32_t> undelayed(delayed.tokens.begin() + 6,
                                            delayed.tokens.end());
  CHECK(undelayed == pair.audio.tokens);
}

TEST_CASE("golden: text only") {
  const auto seq = build_task_sequence(TaskKind::TextOnly, two_segments());
  const Flat f = flatten(seq);
  CHECK(f.text == std::vector<std::int32_t>{70, 71, kTextBlank, 80, 81});
  CHECK(f.audio == std::vector<std::int32_t>(5, -1));
  CHECK(f.segment == std::vector<std::size_t>{0, 0, 0, 1, 1});
  CHECK(f.mode == std::vector<std::string>(5, "t"));
  CHECK(f.loss_text == std::vector<bool>(5, true));
  CHECK(f.loss_audio == std::vector<bool>(5, false));
}

TEST_CASE("golden: audio only") {
  const auto seq = build_task_sequence(TaskKind::AudioOnly, two_segments());
  const Flat f = flatten(seq);
  CHECK(f.audio == std::vector<std::int32_t>{10, 11, 12, 20, 21});
  CHECK(f.mode == std::vector<std::string>(5, "ad"));
  CHECK(f.loss_audio == std::vector<bool>(5, true));
  CHECK(f.loss_text == std::vector<bool>(5, false));
}

TEST_CASE("golden: asr mapping a1 t1 a2 t2, loss on text") {
  const auto seq = build_task_sequence(TaskKind::ASRMap, two_segments());
  const Flat f = flatten(seq);
  CHECK(f.audio == std::vector<std::int32_t>{10, 11, 12, -1, -1, -1, 20, 21, -1, -1});
  CHECK(f.text == std::vector<std::int32_t>{-1, -1, -1, 70, 71, kTextBlank, -1, -1, 80, 81});
  CHECK(f.mode == std::vector<std::string>{"a", "a", "a", "t", "t", "t", "a", "a", "t", "t"});
  CHECK(f.loss_audio == std::vector<bool>(10, false));
  CHECK(f.loss_text ==
        std::vector<bool>{false, false, false, true, true, true, false, false, true, true});
}

TEST_CASE("golden: tts mapping t1 ad1 t2 ad2, loss on semantic audio") {
  const auto seq = build_task_sequence(TaskKind::TTSMap, two_segments());
  const Flat f = flatten(seq);
  CHECK(f.text == std::vector<std::int32_t>{70, 71, kTextBlank, -1, -1, -1, 80, 81, -1, -1});
  CHECK(f.audio == std::vector<std::int32_t>{-1, -1, -1, 10, 11, 12, -1, -1, 20, 21});
  CHECK(f.mode == std::vector<std::string>{"t", "t", "t", "ad", "ad", "ad", "t", "t", "ad", "ad"});
  CHECK(f.loss_text == std::vector<bool>(10, false));
  CHECK(f.loss_audio ==
        std::vector<bool>{false, false, false, true, true, true, false, false, true, true});
}

TEST_CASE("golden: audio-to-semantic interleaving a1 ad2") {
  const auto seq = build_task_sequence(TaskKind::Audio2Semantic, two_segments());
  const Flat f = flatten(seq);
  CHECK(f.audio == std::vector<std::int32_t>{10, 11, 12, 20, 21});
  CHECK(f.mode == std::vector<std::string>{"a", "a", "a", "ad", "ad"});
  CHECK(f.loss_audio == std::vector<bool>{false, false, false, true, true});
  CHECK(f.loss_text == std::vector<bool>(5, false));
}

TEST_CASE("audio-to-semantic over four segments places loss on 2 and 4") {
  auto segs = two_segments();
  segs.push_back(align_streams(audio({30}), text({85})));
  segs.push_back(align_streams(audio({40, 41}), text({86})));
  const auto seq = build_task_sequence(TaskKind::Audio2Semantic, segs);
  const auto runs = element_runs(seq);
  REQUIRE(runs.size() == 4);
  CHECK(runs[0] == std::pair<std::size_t, std::string>{0, "a"});
  CHECK(runs[1] == std::pair<std::size_t, std::string>{1, "ad"});
  CHECK(runs[2] == std::pair<std::size_t, std::string>{2, "a"});
  CHECK(runs[3] == std::pair<std::size_t, std::string>{3, "ad"});
  for (std::size_t i = 0; i < seq.positions.size(); ++i) {
    const bool target = seq.positions[i].segment % 2 == 1;
    CHECK(seq.loss_audio[i] == target);
  }
}

TEST_CASE("golden: audio-to-text interleaving a1 t2") {
  const auto seq = build_task_sequence(TaskKind::Audio2Text, two_segments());
  const Flat f = flatten(seq);
  CHECK(f.audio == std::vector<std::int32_t>{10, 11, 12, -1, -1});
  CHECK(f.text == std::vector<std::int32_t>{-1, -1, -1, 80, 81});
  CHECK(f.mode == std::vector<std::string>{"a", "a", "a", "t", "t"});
  CHECK(f.loss_text == std::vector<bool>{false, false, false, true, true});
  CHECK(f.loss_audio == std::vector<bool>(5, false));
}

TEST_CASE("golden: audio-to-semantic-and-text with the 6-token delay") {
  const auto seq = build_task_sequence(TaskKind::Audio2SemanticText, two_segments());
  const Flat f = flatten(seq);
  // Context a1: 3 positions; target pair: 2 + 6 = 8 positions.
  REQUIRE(seq.positions.size() == 11);
  CHECK(seq.delay_tokens == 6);
  CHECK(f.audio == std::vector<std::int32_t>{10, 11, 12, kAudioBlank, kAudioBlank,
                                             kAudioBlank, kAudioBlank, kAudioBlank,
                                             kAudioBlank, 20, 21});
  CHECK(f.text == std::vector<std::int32_t>{-1, -1, -1, 80, 81, kTextBlank, kTextBlank,
                                            kTextBlank, kTextBlank, kTextBlank,
                                            kTextBlank});
  CHECK(f.mode == std::vector<std::string>{"a", "a", "a", "ad", "ad", "ad", "ad", "ad",
                                           "ad", "ad", "ad"});
  CHECK(f.loss_audio == std::vector<bool>{false, false, false, true, true, true, true,
                                          true, true, true, true});
  CHECK(f.loss_text == f.loss_audio);

  // The audio target stream begins with exactly 6 blanks.
  for (int i = 3; i < 9; ++i) CHECK(f.audio[i] == kAudioBlank);
  CHECK(f.audio[9] != kAudioBlank);
}

TEST_CASE("context positions never carry loss in any kind") {
  auto segs = two_segments();
  segs.push_back(align_streams(audio({30, 31, 32}), text({90, 91, 92})));
  segs.push_back(align_streams(audio({40}), text({95, 96})));
  for (TaskKind kind : kAllTaskKinds) {
    const auto seq = build_task_sequence(kind, segs);
    REQUIRE(seq.loss_audio.size() == seq.positions.size());
    REQUIRE(seq.loss_text.size() == seq.positions.size());
    for (std::size_t i = 0; i < seq.positions.size(); ++i) {
      if (seq.positions[i].mode == InputMode::FullAudio) {
        CHECK_FALSE(seq.loss_audio[i]);
        CHECK_FALSE(seq.loss_text[i]);
      }
    }
  }
}

TEST_CASE("position bookkeeping: totals equal aligned lengths plus delays") {
  auto segs = two_segments();  // aligned lengths 3 and 2
  CHECK(build_task_sequence(TaskKind::TextOnly, segs).positions.size() == 5);
  CHECK(build_task_sequence(TaskKind::AudioOnly, segs).positions.size() == 5);
  CHECK(build_task_sequence(TaskKind::ASRMap, segs).positions.size() == 10);
  CHECK(build_task_sequence(TaskKind::TTSMap, segs).positions.size() == 10);
  CHECK(build_task_sequence(TaskKind::Audio2Semantic, segs).positions.size() == 5);
  CHECK(build_task_sequence(TaskKind::Audio2Text, segs).positions.size() == 5);
  CHECK(build_task_sequence(TaskKind::Audio2SemanticText, segs).positions.size() ==
        3 + 2 + 6);
}

TEST_CASE("interleaving rejects too few segments and odd counts by default") {
  const std::vector<AlignedPair> one = {align_streams(audio({1}), text({2}))};
  CHECK_THROWS_AS(build_task_sequence(TaskKind::Audio2Text, one), ContractViolation);
  CHECK_THROWS_AS(build_task_sequence(TaskKind::Audio2Semantic, one), ContractViolation);

  auto three = two_segments();
  three.push_back(align_streams(audio({30}), text({85})));
  CHECK_THROWS_AS(build_task_sequence(TaskKind::Audio2Text, three), ContractViolation);
}

TEST_CASE("footnote variants cover odd segment counts") {
  auto three = two_segments();
  three.push_back(align_streams(audio({30}), text({85})));

  // Variant: first segment is the target (ad_1, a_2, ad_3).
  SequencerConfig start_target;
  start_target.interleave.start_with_target = true;
  const auto s1 = build_task_sequence(TaskKind::Audio2Semantic, three, start_target);
  const auto runs1 = element_runs(s1);
  REQUIRE(runs1.size() == 3);
  CHECK(runs1[0].second == "ad");
  CHECK(runs1[1].second == "a");
  CHECK(runs1[2].second == "ad");

  // Variant: last segment stays context (a_1, ad_2, a_3).
  SequencerConfig end_context;
  end_context.interleave.end_with_context = true;
  const auto s2 = build_task_sequence(TaskKind::Audio2Semantic, three, end_context);
  const auto runs2 = element_runs(s2);
  REQUIRE(runs2.size() == 3);
  CHECK(runs2[0].second == "a");
  CHECK(runs2[1].second == "ad");
  CHECK(runs2[2].second == "a");
}

TEST_CASE("empty segment list is rejected") {
  CHECK_THROWS_AS(build_task_sequence(TaskKind::TextOnly, {}), ContractViolation);
}

TEST_CASE("task sequence json round-trips") {
  for (TaskKind kind : kAllTaskKinds) {
    const auto seq = build_task_sequence(kind, two_segments());
    CHECK(task_sequence_from_json(task_sequence_to_json(seq)) == seq);
  }
}

TEST_CASE("mixer weights normalize to the default ratio") {
  double total = 0;
  for (double w : kDefaultTaskWeights) total += w;
  CHECK(total == 14.0);
  CHECK(kDefaultTaskWeights[0] / total == 0.5);       // TextOnly
  CHECK(kDefaultTaskWeights[6] / total == doctest::Approx(2.0 / 14.0));
}

TEST_CASE("task sampling is deterministic per seed and hits the weights") {
  TaskMixer a(kDefaultTaskWeights, 42), b(kDefaultTaskWeights, 42);
  for (int i = 0; i < 64; ++i) CHECK(a.sample() == b.sample());

  TaskMixer mixer(kDefaultTaskWeights, 7);
  std::map<TaskKind, std::size_t> counts;
  const std::size_t n = 14000;
  for (std::size_t i = 0; i < n; ++i) ++counts[mixer.sample()];
  double total_w = 0;
  for (double w : kDefaultTaskWeights) total_w += w;
  for (std::size_t k = 0; k < kAllTaskKinds.size(); ++k) {
    const double p = kDefaultTaskWeights[k] / total_w;
    const double sigma = std::sqrt(n * p * (1 - p));
    CHECK(std::abs(static_cast<double>(counts[kAllTaskKinds[k]]) - n * p) <=
          3.0 * sigma);
  }
}

TEST_CASE("mixer rejects non-positive weights") {
  std::array<double, 7> weights = kDefaultTaskWeights;
  weights[3] = 0.0;
  CHECK_THROWS_AS(TaskMixer(weights, 1), ConfigError);
}

namespace {

SftPools synthetic_pools() {
  SftPools pools;
  for (const std::string task : {"asr", "aqa", "aac", "conversation"}) {
    InstructionPool pool;
    pool.task = task;
    pool.expected_size = task == "asr" ? kAsrPoolSize : kDefaultPoolSize;
    for (std::size_t i = 0; i < pool.expected_size; ++i) {
      Instruction ins;
      ins.text_tokens = {static_cast<std::int32_t>(i), 1, 2};
      ins.audio_tokens = {static_cast<std::int32_t>(i), 3};
      pool.entries.push_back(std::move(ins));
    }
    pools.by_task.emplace(task, std::move(pool));
  }
  return pools;
}

SftDatum asr_datum() {
  SftDatum d;
  d.task = "asr";
  d.prompt_audio = TokenStream::semantic({11, 12, 13, 14}, kAudioBlank);
  d.response_text = TokenStream::text({71, 72}, kTextBlank);
  return d;
}

}  // namespace

TEST_CASE("sft pools validate their sizes") {
  auto pools = synthetic_pools();
  CHECK_NOTHROW(pools.validate());
  pools.by_task["aqa"].entries.pop_back();
  CHECK_THROWS_AS(pools.validate(), ConfigError);

  SftPools empty;
  empty.by_task["asr"] = InstructionPool{"asr", kAsrPoolSize, {}};
  CHECK_THROWS_AS(empty.validate(), ConfigError);
}

TEST_CASE("sft example draws instructions reproducibly from the right pool") {
  const auto pools = synthetic_pools();
  SeededRng r1(99), r2(99);
  const auto a = build_sft_example(asr_datum(), pools, r1);
  const auto b = build_sft_example(asr_datum(), pools, r2);
  CHECK(a.instruction_index == b.instruction_index);
  CHECK(a.instruction_as_audio == b.instruction_as_audio);
  CHECK(a.sequence == b.sequence);
  CHECK(a.instruction_index < kAsrPoolSize);

  SftDatum aqa = asr_datum();
  aqa.task = "aqa";
  SeededRng r3(1234);
  for (int i = 0; i < 50; ++i)
    CHECK(build_sft_example(aqa, pools, r3).instruction_index < kDefaultPoolSize);

  SftDatum unknown = asr_datum();
  unknown.task = "nonexistent";
  SeededRng r4(5);
  CHECK_THROWS_AS(build_sft_example(unknown, pools, r4), ConfigError);
}

TEST_CASE("sft loss sits on the response, never the instruction or prompt") {
  const auto pools = synthetic_pools();

  SftDatum with_audio = asr_datum();
  with_audio.task = "conversation";
  with_audio.response_audio = TokenStream::semantic({31, 32, 33}, kAudioBlank);
  SeededRng rng(17);
  const auto ex = build_sft_example(with_audio, pools, rng);
  const auto& seq = ex.sequence;
  for (std::size_t i = 0; i < seq.positions.size(); ++i) {
    const auto segment = seq.positions[i].segment;
    if (segment < 2) {
      CHECK_FALSE(seq.loss_audio[i]);
      CHECK_FALSE(seq.loss_text[i]);
    } else {
      CHECK(seq.loss_audio[i]);
      CHECK(seq.loss_text[i]);
    }
  }
  // Dual-head response: the audio target opens with the configured delay.
  bool in_response = false;
  int leading_blanks = 0;
  for (std::size_t i = 0; i < seq.positions.size(); ++i) {
    if (seq.positions[i].segment == 2 && !in_response) in_response = true;
    if (in_response && seq.positions[i].segment == 2 &&
        seq.positions[i].audio == kAudioBlank && leading_blanks >= 0)
      ++leading_blanks;
    else if (in_response)
      break;
  }
  CHECK(leading_blanks == 6);

  SftDatum no_response = asr_datum();
  no_response.response_text.reset();
  SeededRng rng2(3);
  CHECK_THROWS_AS(build_sft_example(no_response, pools, rng2), ContractViolation);
}

TEST_CASE("sft modality coin is near fair over many draws") {
  const auto pools = synthetic_pools();
  SeededRng rng(2718);
  const int n = 10000;
  int as_audio = 0;
  for (int i = 0; i < n; ++i)
    if (build_sft_example(asr_datum(), pools, rng).instruction_as_audio) ++as_audio;
  CHECK(std::abs(static_cast<double>(as_audio) / n - 0.5) < 0.02);
}
