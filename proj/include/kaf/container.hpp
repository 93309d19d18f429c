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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "kaf/rng.hpp"

// Length-prefixed binary record container, magic "KAFSEQ1".
//
// Layout:
//   bytes 0..6   magic "KAFSEQ1"
//   record 0     header JSON (kind, config_hash, ...)
//   record 1..N  payload JSON, one per logical record
//   footer       u32 0xFFFFFFFF, u64 record count, u64 running checksum
// Each record is u32 LE payload length, payload bytes, u64 LE fnv1a64 of
// the payload. Any truncation or checksum mismatch surfaces as
// IntegrityError; readers never silently drop a tail.

namespace kaf {

inline constexpr std::string_view kContainerMagic = "KAFSEQ1";

class ContainerWriter {
 public:
  ContainerWriter(std::ostream& out, const nlohmann::json& header);

  void write(const nlohmann::json& payload);
  // Writes the footer; further writes are invalid.
  void finish();

  std::size_t records_written() const { return records_; }

 private:
  void write_record(const std::string& bytes);

  std::ostream& out_;
  std::size_t records_ = 0;
  std::uint64_t running_ = kFnvOffset;
  bool finished_ = false;
};

class ContainerReader {
 public:
  explicit ContainerReader(std::istream& in);

  const nlohmann::json& header() const { return header_; }
  // nullopt after the footer has been consumed and verified.
  std::optional<nlohmann::json> next();

  std::size_t records_read() const { return records_; }

 private:
  std::istream& in_;
  nlohmann::json header_;
  std::size_t records_ = 0;
  std::uint64_t running_ = kFnvOffset;
  bool done_ = false;
};

// Convenience file round-trip.
void write_container_file(const std::filesystem::path& path,
                          const nlohmann::json& header,
                          const std::vector<nlohmann::json>& records);

struct ContainerContents {
  nlohmann::json header;
  std::vector<nlohmann::json> records;
};

ContainerContents read_container_file(const std::filesystem::path& path);

// Full-format check; returns the record count, throws IntegrityError on
// any violation.
std::size_t validate_container(const std::filesystem::path& path);

}  // namespace kaf
