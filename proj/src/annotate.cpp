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

#include "kaf/annotate.hpp"

#include <algorithm>

namespace kaf {

void AnnotatePolicy::validate() const {
  if (!(comma_gap_lo_s > 0.0) || !(comma_gap_lo_s < comma_gap_hi_s))
    throw ConfigError("annotate: need 0 < comma_gap_lo_s < comma_gap_hi_s");
  if (enhancement_ratio < 0.0 || enhancement_ratio > 1.0)
    throw ConfigError("annotate: enhancement_ratio must lie in [0, 1]");
  if (keep_languages.empty())
    throw ConfigError("annotate: keep_languages must not be empty");
}

RouteDecision route_language(const std::optional<LanguageTag>& tag,
                             const AnnotatePolicy& policy) {
  if (!tag.has_value()) return {false, LanguageTag::Kind::other, "no_language"};
  const auto kind = tag->kind;
  const bool keep = std::find(policy.keep_languages.begin(),
                              policy.keep_languages.end(),
                              kind) != policy.keep_languages.end();
  if (keep && kind != LanguageTag::Kind::other) return {true, kind, {}};
  return {false, kind, "language_not_retained:" + tag->str()};
}

std::string insert_punctuation(const std::vector<TimedChar>& chars,
                               const AnnotatePolicy& policy) {
  if (chars.empty())
    throw ContractViolation("insert_punctuation: empty char list");
  std::string out;
  for (std::size_t i = 0; i < chars.size(); ++i) {
    out += chars[i].ch;
    if (i + 1 == chars.size()) break;
    const double gap = chars[i + 1].onset_s - chars[i].onset_s;
    if (gap < 0.0)
      throw ContractViolation("insert_punctuation: onsets not sorted at index " +
                              std::to_string(i + 1));
    if (gap >= policy.comma_gap_hi_s) {
      out += policy.period;
    } else if (gap > policy.comma_gap_lo_s) {
      out += policy.comma;
    }
  }
  return out;
}

EnhancementChoice select_enhancement(SeededRng& rng, const AnnotatePolicy& policy) {
  return rng.uniform_double() < policy.enhancement_ratio
             ? EnhancementChoice::Enhanced
             : EnhancementChoice::Original;
}

const char* to_string(EnhancementChoice choice) {
  return choice == EnhancementChoice::Original ? "original" : "enhanced";
}

}  // namespace kaf
