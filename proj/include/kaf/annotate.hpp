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

#include <string>
#include <vector>

#include "kaf/backends.hpp"
#include "kaf/core.hpp"
#include "kaf/rng.hpp"

// Language routing, pause-driven punctuation insertion, and the
// original-vs-enhanced audio choice.

namespace kaf {

struct AnnotatePolicy {
  // Gap bands, onset to onset: comma on (comma_gap_lo_s, comma_gap_hi_s),
  // period on [comma_gap_hi_s, inf). The comma upper bound doubles as the
  // period lower bound, so every gap above comma_gap_lo_s gets exactly one
  // mark.
  double comma_gap_lo_s = 0.5;
  double comma_gap_hi_s = 1.0;
  std::string comma = ",";
  std::string period = ".";
  std::vector<LanguageTag::Kind> keep_languages = {LanguageTag::Kind::en,
                                                   LanguageTag::Kind::zh};
  double enhancement_ratio = 0.5;  // probability of choosing Enhanced

  void validate() const;  // throws ConfigError
};

struct RouteDecision {
  bool transcribe = false;
  LanguageTag::Kind language = LanguageTag::Kind::other;
  std::string discard_reason;  // set when transcribe is false
};

// en -> Transcribe(en), zh -> Transcribe(zh), anything else (or a missing
// tag) -> Discard with the reason recorded.
RouteDecision route_language(const std::optional<LanguageTag>& tag,
                             const AnnotatePolicy& policy);

// Inserts a comma or period between consecutive chars depending on the
// onset gap. Nothing is appended after the last char. Applies to the
// character-timestamp (zh) path only; en transcripts pass through the
// pipeline untouched.
std::string insert_punctuation(const std::vector<TimedChar>& chars,
                               const AnnotatePolicy& policy);

enum class EnhancementChoice { Original, Enhanced };

// One independent draw per segment, P(Enhanced) = policy.enhancement_ratio.
EnhancementChoice select_enhancement(SeededRng& rng, const AnnotatePolicy& policy);

const char* to_string(EnhancementChoice choice);

}  // namespace kaf
