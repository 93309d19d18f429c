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

#include "kaf/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace kaf {

using nlohmann::json;

void validate_stages(const std::vector<std::string>& stages) {
  std::size_t next = 0;
  for (const auto& s : stages) {
    if (next >= kPipelineStages.size() || s != kPipelineStages[next])
      throw ContractViolation("manifest: stage stamps not monotone at '" + s + "'");
    ++next;
  }
}

bool ManifestRecord::has_stage(const std::string& stage) const {
  return std::find(stages.begin(), stages.end(), stage) != stages.end();
}

void ManifestRecord::stamp_stage(const std::string& stage) {
  if (has_stage(stage)) return;
  stages.push_back(stage);
  validate_stages(stages);
}

json ManifestRecord::to_json() const {
  json segs = json::array();
  for (const auto& ms : segments) {
    json s{{"start_ms", ms.seg.span.start_ms()},
           {"end_ms", ms.seg.span.end_ms()},
           {"speaker", ms.seg.speaker}};
    if (ms.seg.transcript) s["transcript"] = *ms.seg.transcript;
    if (ms.seg.language) s["language"] = ms.seg.language->str();
    if (ms.enhancement) s["enhancement"] = to_string(*ms.enhancement);
    segs.push_back(std::move(s));
  }
  json cls = json::array();
  for (const auto& c : clusters) {
    json centroid = json::array();
    for (Eigen::Index i = 0; i < c.centroid.size(); ++i)
      centroid.push_back(c.centroid(i));
    cls.push_back(json{{"id", c.id}, {"centroid", std::move(centroid)}});
  }
  json j{{"asset_id", asset_id},
         {"source", source},
         {"duration_s", duration_s},
         {"segments", std::move(segs)},
         {"clusters", std::move(cls)},
         {"stages", stages}};
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  return j;
}

ManifestRecord ManifestRecord::from_json(const json& j) {
  ManifestRecord r;
  try {
    r.asset_id = j.at("asset_id").get<std::string>();
    r.source = j.value("source", "");
    r.duration_s = j.value("duration_s", 0.0);
    for (const auto& s : j.value("segments", json::array())) {
      ManifestSegment ms;
      ms.seg.span = TimeSpan::from_millis(s.at("start_ms").get<std::int64_t>(),
                                          s.at("end_ms").get<std::int64_t>());
      ms.seg.speaker = s.at("speaker").get<std::int64_t>();
      ms.seg.source = r.asset_id;
      if (s.contains("transcript")) ms.seg.transcript = s.at("transcript").get<std::string>();
      if (s.contains("language"))
        ms.seg.language = LanguageTag::parse(s.at("language").get<std::string>());
      if (s.contains("enhancement"))
        ms.enhancement = s.at("enhancement").get<std::string>() == "enhanced"
                             ? EnhancementChoice::Enhanced
                             : EnhancementChoice::Original;
      r.segments.push_back(std::move(ms));
    }
    for (const auto& c : j.value("clusters", json::array())) {
      ClusterEntry entry;
      entry.id = c.at("id").get<std::int64_t>();
      const auto& values = c.at("centroid");
      entry.centroid.resize(static_cast<Eigen::Index>(values.size()));
      for (Eigen::Index i = 0; i < entry.centroid.size(); ++i)
        entry.centroid(i) = values.at(i).get<double>();
      r.clusters.push_back(std::move(entry));
    }
    r.stages = j.value("stages", std::vector<std::string>{});
    validate_stages(r.stages);
    r.config_hash = j.value("config_hash", "");
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed manifest record: ") + e.what());
  }
  return r;
}

std::vector<SpeakerCluster> ManifestRecord::speaker_clusters() const {
  std::map<std::int64_t, std::vector<std::int64_t>> members;
  for (std::size_t i = 0; i < segments.size(); ++i)
    members[segments[i].seg.speaker].push_back(static_cast<std::int64_t>(i));

  std::vector<SpeakerCluster> out;
  std::map<std::int64_t, const ClusterEntry*> by_id;
  for (const auto& c : clusters) by_id[c.id] = &c;
  for (const auto& [speaker, segs] : members) {
    const auto it = by_id.find(speaker);
    if (it == by_id.end())
      throw ContractViolation("asset " + asset_id + ": segment speaker " +
                              std::to_string(speaker) + " has no cluster entry");
    out.emplace_back(speaker, segs, Embedding(it->second->centroid));
  }
  return out;
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
  auto result = read_manifest_lenient(path);
  if (!result.skipped.empty())
    throw IoError("manifest " + path.string() + " line " +
                  std::to_string(result.skipped.front().first) + ": " +
                  result.skipped.front().second);
  return std::move(result.records);
}

ManifestReadResult read_manifest_lenient(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  ManifestReadResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      result.records.push_back(ManifestRecord::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      result.skipped.emplace_back(lineno, e.what());
    }
  }
  return result;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path.string());
  for (const auto& r : records) out << r.to_json().dump() << "\n";
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace kaf
