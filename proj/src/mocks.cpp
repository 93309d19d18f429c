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

#include "kaf/mocks.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace kaf {

using nlohmann::json;

std::string span_key(const std::string& asset_id, const TimeSpan& span) {
  return asset_id + "|" + std::to_string(span.start_ms()) + "|" +
         std::to_string(span.end_ms());
}

namespace {

std::uint64_t span_hash(const std::string& asset_id, const TimeSpan& span,
                        std::uint64_t salt) {
  std::uint64_t h = fnv1a64(span_key(asset_id, span));
  return fnv1a64_u64(salt, h);
}

json load_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open fixture file: " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed fixture file " + file.string() + ": " + e.what());
  }
  return j;
}

}  // namespace

std::vector<std::int32_t> mock_semantic_tokens(const std::string& asset_id,
                                               const TimeSpan& span,
                                               std::int32_t vocab) {
  const std::size_t count = static_cast<std::size_t>(
      std::max<std::int64_t>(1, span.duration_ms() / kMillisPerToken));
  std::uint64_t state = span_hash(asset_id, span, 0x746f6b656e73ULL);
  std::vector<std::int32_t> tokens(count);
  for (auto& t : tokens)
    t = static_cast<std::int32_t>(splitmix64_next(state) %
                                  static_cast<std::uint64_t>(vocab));
  return tokens;
}

std::vector<std::int32_t> text_tokens_from_utf8(const std::string& text) {
  std::vector<std::int32_t> tokens;
  tokens.reserve(text.size());
  for (unsigned char c : text) tokens.push_back(static_cast<std::int32_t>(c));
  return tokens;
}

Embedding HashEmbeddingBackend::embed(const std::string& asset_id,
                                      const TimeSpan& span) {
  std::uint64_t state = span_hash(asset_id, span, salt_);
  Eigen::VectorXd v(dim_);
  for (Eigen::Index i = 0; i < dim_; ++i)
    v(i) = 2.0 * u64_to_unit_double(splitmix64_next(state)) - 1.0;
  return Embedding(std::move(v));
}

FixtureEmbeddingBackend::FixtureEmbeddingBackend(const std::filesystem::path& file) {
  const json j = load_json_file(file);
  dim_ = j.at("dim").get<Eigen::Index>();
  for (const auto& [key, values] : j.at("embeddings").items()) {
    Eigen::VectorXd v(dim_);
    if (static_cast<Eigen::Index>(values.size()) != dim_)
      throw IoError("embedding fixture '" + key + "' has wrong dimension");
    for (Eigen::Index i = 0; i < dim_; ++i) v(i) = values.at(i).get<double>();
    table_.emplace(key, std::move(v));
  }
}

Embedding FixtureEmbeddingBackend::embed(const std::string& asset_id,
                                         const TimeSpan& span) {
  const auto it = table_.find(span_key(asset_id, span));
  if (it == table_.end())
    throw IoError("no fixture embedding for " + span_key(asset_id, span));
  return Embedding(it->second);
}

FixtureAnnotationBackend::FixtureAnnotationBackend(const std::filesystem::path& file) {
  const json j = load_json_file(file);
  for (const auto& [key, tag] : j.at("languages").items())
    languages_.emplace(key, tag.get<std::string>());
  if (j.contains("transcripts")) {
    for (const auto& [key, entry] : j.at("transcripts").items()) {
      TranscriptResult r;
      if (entry.contains("text")) r.text = entry.at("text").get<std::string>();
      if (entry.contains("chars")) {
        for (const auto& c : entry.at("chars"))
          r.chars.push_back(
              {c.at("ch").get<std::string>(), c.at("onset_s").get<double>()});
      }
      transcripts_.emplace(key, std::move(r));
    }
  }
}

std::optional<LanguageTag> FixtureAnnotationBackend::identify(
    const std::string& asset_id, const TimeSpan& span) {
  const auto it = languages_.find(span_key(asset_id, span));
  if (it == languages_.end()) return std::nullopt;
  return LanguageTag::parse(it->second);
}

TranscriptResult FixtureAnnotationBackend::transcribe(const std::string& asset_id,
                                                      const TimeSpan& span,
                                                      LanguageTag::Kind) {
  const auto it = transcripts_.find(span_key(asset_id, span));
  if (it == transcripts_.end())
    throw IoError("no fixture transcript for " + span_key(asset_id, span));
  return it->second;
}

std::optional<LanguageTag> HashAnnotationBackend::identify(
    const std::string& asset_id, const TimeSpan& span) {
  static const char* kTags[] = {"en", "zh", "en", "zh", "fr"};
  const std::uint64_t h = span_hash(asset_id, span, salt_);
  return LanguageTag::parse(kTags[h % 5]);
}

TranscriptResult HashAnnotationBackend::transcribe(const std::string& asset_id,
                                                   const TimeSpan& span,
                                                   LanguageTag::Kind language) {
  std::uint64_t state = span_hash(asset_id, span, salt_ ^ kDimSalt);
  TranscriptResult r;
  if (language == LanguageTag::Kind::en) {
    std::string text = "w";
    const std::size_t words = 3 + state % 5;
    for (std::size_t i = 1; i < words; ++i)
      text += " w" + std::to_string(splitmix64_next(state) % 10);
    r.text = text + ".";
    return r;
  }
  // zh path: chars with gaps spread across the punctuation bands.
  const std::size_t n = 4 + splitmix64_next(state) % 6;
  double onset = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r.chars.push_back({std::string(1, static_cast<char>('a' + i % 26)), onset});
    onset += 0.1 + 1.4 * u64_to_unit_double(splitmix64_next(state));
  }
  return r;
}

Eigen::MatrixXd HashMelDecoder::decode(const std::vector<PromptChunk>& prompt,
                                       std::span<const std::int32_t> condition) {
  std::uint64_t h = kFnvOffset;
  std::size_t prompt_tokens = 0;
  for (const auto& chunk : prompt) {
    for (std::int32_t id : chunk.tokens) h = fnv1a64(&id, sizeof(id), h);
    prompt_tokens += chunk.tokens.size();
  }
  for (std::int32_t id : condition) h = fnv1a64(&id, sizeof(id), h);
  h = fnv1a64_u64(salt_, h);

  const std::size_t frame_base = tokens_to_mel_frames(prompt_tokens);
  const auto rows = static_cast<Eigen::Index>(tokens_to_mel_frames(condition.size()));
  Eigen::MatrixXd out(rows, mel_dim_);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::uint64_t t = frame_base + static_cast<std::size_t>(r);
    for (Eigen::Index j = 0; j < mel_dim_; ++j) {
      const std::uint64_t x =
          h ^ ((t + 1) * kFrameSalt) ^ ((static_cast<std::uint64_t>(j) + 1) * kDimSalt);
      out(r, j) = u64_to_unit_double(splitmix64_scramble(x));
    }
  }
  return out;
}

std::vector<std::uint8_t> ByteTokenizer::encode(const std::vector<std::int32_t>& tokens) {
  std::vector<std::uint8_t> bytes(tokens.size() * 4);
  for (std::size_t i = 0; i < tokens.size(); ++i)
    std::memcpy(bytes.data() + i * 4, &tokens[i], 4);
  return bytes;
}

TokenizedAudio ByteTokenizer::tokenize(const std::vector<std::uint8_t>& audio_bytes) {
  if (audio_bytes.size() % 4 != 0)
    throw ContractViolation("ByteTokenizer: byte count not a multiple of 4");
  std::vector<std::int32_t> tokens(audio_bytes.size() / 4);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::int32_t id = 0;
    std::memcpy(&id, audio_bytes.data() + i * 4, 4);
    if (id < 0 || id >= vocab_)
      throw ContractViolation("ByteTokenizer: token id " + std::to_string(id) +
                              " outside vocab [0, " + std::to_string(vocab_) + ")");
    tokens[i] = id;
  }
  const std::size_t count = tokens.size();
  TokenizedAudio out{TokenStream::semantic(std::move(tokens), vocab_),
                     FeatureHandle{"", count}};
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(
                    fnv1a64(audio_bytes.data(), audio_bytes.size())));
  out.features.asset_id = std::string("audio-") + hex;
  return out;
}

DualStream EchoLlm::generate(const LlmRequest& request) {
  if (request.new_token_offset > request.input.size())
    throw ContractViolation("EchoLlm: new_token_offset out of range");
  DualStream out;
  out.audio.assign(request.input.begin() +
                       static_cast<std::ptrdiff_t>(request.new_token_offset),
                   request.input.end());
  out.text = text_;
  return out;
}

bool CountdownVad::end_of_speech(const AudioFrame&) {
  if (remaining_ == 0) return true;
  --remaining_;
  return remaining_ == 0;
}

void MemoryStore::put(const std::string& key, std::vector<std::uint8_t> value) {
  std::lock_guard<std::mutex> lock(mu_);
  data_[key] = std::move(value);
}

std::optional<std::vector<std::uint8_t>> MemoryStore::get(const std::string& key) {
  std::lock_guard<std::mutex> lock(mu_);
  const auto it = data_.find(key);
  if (it == data_.end()) return std::nullopt;
  return it->second;
}

}  // namespace kaf
